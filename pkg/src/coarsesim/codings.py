"""Interval families I, J, R; set codings, decoders and distance-1 constructions.

* ``I_n = [n!, (n+1)!)``; ``I_0`` is empty because ``0! = 1! = 1``.
* ``J_k = [2^k - 1, 2^(k+1) - 1)``; these partition all of ω, 0 included.
* ``R_k = {m > 0 : 2^k | m, 2^(k+1) ∤ m}``; its n-th element is
  ``2^k (2n + 1)``.  0 lies in no ``R_k`` and every R-based coding
  assigns it bit 0.
"""

from __future__ import annotations

import functools
import math
import operator
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .density import CheckpointGrid, block_bounds
from .seq import (
    BitSequence,
    BudgetExceeded,
    _mix64,
    bit_length,
    check_cap,
    complement,
    gather,
    truncate,
    two_adic_valuation,
)

_FACTORIALS = [math.factorial(n) for n in range(21)]  # 20! < 2**63
_FACT_ARR = np.array(_FACTORIALS, dtype=np.int64)


def cantor_pair(i: int, m: int) -> int:
    """``⟨i, m⟩ = (i + m)(i + m + 1)/2 + i``."""
    s = i + m
    return s * (s + 1) // 2 + i


def cantor_unpair(n: int) -> tuple[int, int]:
    s = (math.isqrt(8 * n + 1) - 1) // 2
    i = n - s * (s + 1) // 2
    return i, s - i


@dataclass(frozen=True)
class IntervalFamily:
    """One of the three block families; ``kind`` is ``"I"``, ``"J"`` or ``"R"``."""

    kind: str

    def __post_init__(self):
        if self.kind not in ("I", "J", "R"):
            raise ValueError(f"unknown interval family {self.kind!r}")

    def contains(self, k: int, m: int) -> bool:
        idx = self.index_of(m)
        return idx is not None and idx[0] == k

    def index_of(self, m: int) -> Optional[tuple[int, int]]:
        """``(k, position of m inside block k)``, or ``None`` when m is in no block."""
        m = operator.index(m)
        if self.kind == "J":
            k = (m + 1).bit_length() - 1
            return k, m - ((1 << k) - 1)
        if m <= 0:
            return None
        if self.kind == "R":
            k = (m & -m).bit_length() - 1
            return k, (m >> k) >> 1
        n = _factorial_floor(m)
        return n, m - math.factorial(n)

    def bounds(self, k: int) -> tuple[int, int]:
        """Half-open bounds of an interval block (I and J only)."""
        if self.kind == "I":
            return math.factorial(k) if k else 1, math.factorial(k + 1)
        if self.kind == "J":
            return block_bounds(k)
        raise ValueError("R blocks are not intervals")

    def element(self, k: int, n: int) -> int:
        """The n-th element (0-based) of block k."""
        if self.kind == "R":
            return (1 << k) * (2 * n + 1)
        lo, hi = self.bounds(k)
        if not 0 <= n < hi - lo:
            raise IndexError(f"block {k} has {hi - lo} elements")
        return lo + n

    def index_array(self, idx: np.ndarray) -> np.ndarray:
        """Vectorised block index; ``-1`` where the position is in no block."""
        if self.kind == "J":
            return bit_length(idx + 1) - 1
        if self.kind == "R":
            out = two_adic_valuation(np.where(idx > 0, idx, 1))
            return np.where(idx > 0, out, -1)
        return np.searchsorted(_FACT_ARR, idx, side="right") - 1


I_FAMILY = IntervalFamily("I")
J_FAMILY = IntervalFamily("J")
R_FAMILY = IntervalFamily("R")
FAMILIES = {"I": I_FAMILY, "J": J_FAMILY, "R": R_FAMILY}


def _factorial_floor(m: int) -> int:
    """Largest n >= 1 with n! <= m (m >= 1)."""
    n, f = 1, 1
    while f * (n + 1) <= m:
        n += 1
        f *= n
    return n


def r_block_size_below(k: int, n: int) -> int:
    """``|R_k ↾ n|``: odd multiples of ``2^k`` that are below ``n``."""
    if n <= 1:
        return 0
    return (((n - 1) >> k) + 1) >> 1


# -- codings ----------------------------------------------------------------

def _blockwise(family: IntervalFamily, value: Callable[[np.ndarray], np.ndarray], idx: np.ndarray) -> np.ndarray:
    ks = family.index_array(idx)
    out = np.zeros(idx.shape, dtype=np.uint8)
    inside = ks >= 0
    if inside.any():
        out[inside] = gather(value, ks[inside])
    return out


def code(kind: str, a: BitSequence) -> BitSequence:
    """``I(A)``, ``J(A)`` or ``R(A)``: the union of the blocks indexed by A."""
    family = FAMILIES[kind]
    name = {"I": "icode", "J": "jcode", "R": "rcode"}[kind]

    def bit(m: int) -> int:
        idx = family.index_of(m)
        return 0 if idx is None else a(idx[0])

    def count(n: int) -> int:
        if n <= 0:
            return 0
        total = 0
        if kind == "R":
            for k in range((n - 1).bit_length() if n > 1 else 0):
                if a(k):
                    total += r_block_size_below(k, n)
            return total
        k = 0
        while True:
            lo, hi = family.bounds(k)
            if lo >= n:
                return total
            if a(k):
                total += min(hi, n) - lo
            k += 1

    return BitSequence(bit, (name, a.descriptor), lambda idx: _blockwise(family, a.at, idx), count)


Family = Union[Sequence[BitSequence], Callable[[int], BitSequence]]


def _family_getter(family: Family) -> Callable[[int], BitSequence]:
    if callable(family) and not isinstance(family, (list, tuple)):
        return functools.lru_cache(maxsize=None)(family)
    members = list(family)
    from .seq import empty

    blank = empty()
    return lambda k: members[k] if k < len(members) else blank


def r_join(family: Family, descriptor: Optional[tuple] = None) -> BitSequence:
    """``⊕^R X_k``: bit ``2^k (2n+1)`` is ``X_k(n)``; bit 0 is 0.

    ``family`` is a list (members beyond its end are empty) or a function
    ``k -> BitSequence``.
    """
    get = _family_getter(family)
    if descriptor is None:
        if isinstance(family, (list, tuple)):
            descriptor = ("rjoin", *[x.descriptor for x in family])
        else:
            descriptor = ("rjoin", family)

    def bit(m: int) -> int:
        if m == 0:
            return 0
        k = (m & -m).bit_length() - 1
        return get(k)((m >> k) >> 1)

    def vec(idx: np.ndarray) -> np.ndarray:
        out = np.zeros(idx.shape, dtype=np.uint8)
        pos = idx > 0
        ks = R_FAMILY.index_array(idx)
        for k in np.unique(ks[pos]):
            sel = ks == k
            out[sel] = get(int(k)).at((idx[sel] >> int(k)) >> 1)
        return out

    return BitSequence(bit, descriptor, vec)


def r_relative(a: BitSequence, c: BitSequence) -> BitSequence:
    """``R^A(C)``: block ``R_k`` carries A when ``k ∈ C`` and ¬A otherwise."""
    not_a = complement(a)
    return r_join(lambda k: a if c(k) else not_a, ("rrel", a.descriptor, c.descriptor))


def approximate_R(a: BitSequence, k: int) -> BitSequence:
    """The k-th approximant ``R(A ∩ [0, k])`` of ``R(A)``."""
    seq = code("R", truncate(a, k))
    seq.descriptor = ("approxr", a.descriptor, k)
    return seq


def recode(b: BitSequence, a: BitSequence) -> BitSequence:
    """A set coarsely equal to B that also carries A on a density-zero set.

    Uses the coinfinite density-one set ``C`` of non-squares: returns
    ``(B ∩ C) ∪ {j^2 : j ∈ A}``.  The result is coarsely similar to B and
    computes A.
    """

    def bit(m: int) -> int:
        r = math.isqrt(m)
        return a(r) if r * r == m else b(m)

    def vec(idx: np.ndarray) -> np.ndarray:
        r = np.floor(np.sqrt(idx.astype(np.float64))).astype(np.int64)
        r -= (r * r > idx).astype(np.int64)
        r += ((r + 1) * (r + 1) <= idx).astype(np.int64)
        sq = r * r == idx
        out = b.at(idx)
        if sq.any():
            out[sq] = a.at(r[sq])
        return out

    return BitSequence(bit, ("recode", b.descriptor, a.descriptor), vec)


# -- decoders ---------------------------------------------------------------

#: Positions examined per block when ``J_k`` is too large to scan whole.
DECODE_SAMPLES = 1 << 16


def block_positions(k: int, samples: int = DECODE_SAMPLES) -> np.ndarray | list[int]:
    """Positions of ``J_k`` used by :func:`decode_J`.

    The whole block when ``2^k <= samples``; otherwise ``samples`` positions
    on a stride ``2^k // samples`` with an offset derived from k.
    """
    lo, hi = block_bounds(k)
    size = hi - lo
    if size <= samples:
        stride, offset, count = 1, 0, size
    else:
        stride = size // samples
        offset = _mix64(k) % stride
        count = samples
    if hi < 1 << 62:
        return lo + offset + stride * np.arange(count, dtype=np.int64)
    return [lo + offset + stride * j for j in range(count)]


def decode_J(c: BitSequence, k: int, samples: Optional[int] = DECODE_SAMPLES) -> int:
    """Majority bit of C on ``J_k`` (ties go to 0).

    ``samples=None`` forbids subsampling: blocks larger than the default cap
    then raise :class:`BudgetExceeded`.
    """
    size = 1 << k
    if samples is None:
        check_cap(size, None)
        samples = size
    pos = block_positions(k, samples)
    if isinstance(pos, np.ndarray):
        ones = int(c.at(pos).sum(dtype=np.int64))
    else:
        ones = sum(c(p) for p in pos)
    return 1 if 2 * ones > len(pos) else 0


def r_density(c: BitSequence, k: int, n: int, cap: Optional[int] = None) -> Fraction:
    """``ρ^k_n(C) = |(C ∩ R_k) ↾ n| / |R_k ↾ n|``."""
    total = r_block_size_below(k, n)
    if total == 0:
        raise ValueError(f"R_{k} has no elements below {n}")
    check_cap(total, cap)
    pos = (np.int64(1) << np.int64(k)) * (2 * np.arange(total, dtype=np.int64) + 1)
    return Fraction(int(c.at(pos).sum(dtype=np.int64)), total)


def decode_R(c: BitSequence, k: int, grid: CheckpointGrid, cap: Optional[int] = None) -> int:
    """1 iff ``ρ^k_n(C) > 1/2`` at the grid's largest checkpoint (ties to 0)."""
    n = grid.checkpoints()[-1]
    if r_block_size_below(k, n) == 0:
        return 0
    return 1 if r_density(c, k, n, cap) > Fraction(1, 2) else 0


def block_noise(fraction: Fraction, seed: int, exact_upto: int = 20) -> BitSequence:
    """A corruption mask flipping a fixed fraction of every ``J_k``.

    For ``k <= exact_upto`` exactly ``floor(fraction * 2^k)`` positions of
    ``J_k`` are set, chosen by a seeded permutation.  Larger blocks flip each
    position independently with that probability (counter-mode hash).
    """
    fraction = Fraction(fraction)
    if not 0 <= fraction <= 1:
        raise ValueError("noise fraction must lie in [0, 1]")

    @functools.lru_cache(maxsize=64)
    def block_mask(k: int) -> np.ndarray:
        size = 1 << k
        flips = (fraction.numerator * size) // fraction.denominator
        rng = np.random.default_rng([seed & 0xFFFFFFFF, k])
        mask = np.zeros(size, dtype=np.uint8)
        mask[rng.choice(size, flips, replace=False)] = 1
        return mask

    threshold = int(fraction * (1 << 64))
    salt = _mix64((seed ^ 0x5DEECE66D) & ((1 << 64) - 1))

    def bit(m: int) -> int:
        k = (m + 1).bit_length() - 1
        if k <= exact_upto:
            return int(block_mask(k)[m - ((1 << k) - 1)])
        return 1 if _mix64((salt + m) & ((1 << 64) - 1)) < threshold else 0

    def vec(idx: np.ndarray) -> np.ndarray:
        ks = J_FAMILY.index_array(idx)
        out = np.zeros(idx.shape, dtype=np.uint8)
        for k in np.unique(ks):
            sel = ks == k
            k = int(k)
            if k <= exact_upto:
                out[sel] = block_mask(k)[idx[sel] - ((1 << k) - 1)]
            else:
                out[sel] = [bit(int(m)) for m in idx[sel]]
        return out

    return BitSequence(bit, ("noise", str(fraction), seed), vec)


# -- distance-one constructions ---------------------------------------------

def diagonal_distance_one(sets: Sequence[BitSequence]) -> BitSequence:
    """A set B at density-distance 1 from every member of ``sets``.

    On ``I_n`` with ``n = ⟨i, m⟩`` (Cantor pairing), B copies ``¬A_i`` when
    ``i < len(sets)`` and is 0 otherwise.  ``B(0) = 0``.
    """
    sets = list(sets)
    if not sets:
        raise ValueError("diagonal construction needs at least one set")

    def bit(m: int) -> int:
        idx = I_FAMILY.index_of(m)
        if idx is None:
            return 0
        i, _ = cantor_unpair(idx[0])
        return 1 - sets[i](m) if i < len(sets) else 0

    def vec(idx: np.ndarray) -> np.ndarray:
        ns = I_FAMILY.index_array(idx)
        out = np.zeros(idx.shape, dtype=np.uint8)
        for n in np.unique(ns):
            if n < 0:
                continue
            i, _ = cantor_unpair(int(n))
            if i < len(sets):
                sel = ns == n
                out[sel] = 1 - sets[i].at(idx[sel])
        return out

    return BitSequence(bit, ("diag", *[s.descriptor for s in sets]), vec)


def nodecode(sigma: str) -> int:
    """Natural-number name of a tree node: ``"1" + sigma`` read in binary."""
    return int("1" + sigma, 2)


def path_codes(path: BitSequence) -> BitSequence:
    """``{nodecode(path ↾ n) : n ∈ ω}``, an infinite set of node names."""

    def bit(k: int) -> int:
        if k < 1:
            return 0
        sigma = bin(k)[3:]
        return int(all(path(j) == int(ch) for j, ch in enumerate(sigma)))

    return BitSequence(bit, ("codes", path.descriptor))


def antichain_member(path: BitSequence) -> BitSequence:
    """``I(A_path)``; members for distinct paths are at density-distance 1."""
    seq = code("I", path_codes(path))
    seq.descriptor = ("antichain", path.descriptor)
    return seq
