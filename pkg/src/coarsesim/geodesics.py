"""Paths in the density metric: the sets C_r, contractions, geodesics, midpoints.

Everything is parametrised by exact rationals so that ``⌊r·i⌋`` is exact.
The triangular partition ``L_1, L_2, …`` of ω has ``|L_i| = i`` and
``min L_i = m_i = i(i-1)/2``.
"""

from __future__ import annotations

import math
import threading
from fractions import Fraction
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .seq import (
    CHUNK,
    DEFAULT_CAP,
    BitSequence,
    BudgetExceeded,
    check_cap,
    complement,
    gather,
    intersect,
    join,
    symdiff,
)


def as_unit_rational(r) -> Fraction:
    r = Fraction(r)
    if not 0 <= r <= 1:
        raise ValueError(f"rational {r} outside [0, 1]")
    return r


def floor_sum(n: int, m: int, a: int, b: int) -> int:
    """``sum(floor((a*i + b) / m) for i in range(n))`` in O(log) steps."""
    total = 0
    while True:
        if a >= m:
            total += (n - 1) * n // 2 * (a // m)
            a %= m
        if b >= m:
            total += n * (b // m)
            b %= m
        y_max = a * n + b
        if y_max < m:
            return total
        n, b = divmod(y_max, m)
        m, a = a, m


class TriangularPartition:
    """Consecutive blocks ``L_i`` (``i >= 1``) with ``|L_i| = i``."""

    @staticmethod
    def m(i: int) -> int:
        """Least element of ``L_i``."""
        return i * (i - 1) // 2

    @staticmethod
    def block_of(n: int) -> tuple[int, int]:
        """``(i, offset)`` with ``n = m_i + offset`` and ``0 <= offset < i``."""
        i = (1 + math.isqrt(8 * n + 1)) // 2
        return i, n - i * (i - 1) // 2

    @staticmethod
    def block_of_array(idx: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        idx = np.asarray(idx, dtype=np.int64)
        i = ((1 + np.sqrt(8.0 * idx.astype(np.float64) + 1)) // 2).astype(np.int64)
        i -= (i * (i - 1) // 2 > idx).astype(np.int64)
        i += ((i + 1) * i // 2 <= idx).astype(np.int64)
        return i, idx - i * (i - 1) // 2


def c_r(r) -> BitSequence:
    """``C_r``: on each ``L_i`` the first ``⌊r·i⌋`` positions."""
    r = as_unit_rational(r)
    p, q = r.numerator, r.denominator

    def bit(n: int) -> int:
        i, off = TriangularPartition.block_of(n)
        return 1 if off < p * i // q else 0

    def vec(idx: np.ndarray) -> np.ndarray:
        i, off = TriangularPartition.block_of_array(idx)
        return (off < (p * i) // q).astype(np.uint8)

    def count(n: int) -> int:
        if n <= 0:
            return 0
        i, off = TriangularPartition.block_of(n)
        return floor_sum(i, q, p, 0) + min(off, p * i // q)

    return BitSequence(bit, ("cr", _fmt(r)), vec, count)


def a_r(a: BitSequence, r) -> BitSequence:
    """The contraction section ``A_r = A ∩ C_r``."""
    r = as_unit_rational(r)
    seq = intersect(a, c_r(r))
    seq.descriptor = ("ar", a.descriptor, _fmt(r))
    return seq


def x_r(r) -> BitSequence:
    """``X_r = C_r ⊕ ¬C_r``; exactly one of ``2n, 2n+1`` is in it."""
    r = as_unit_rational(r)
    cr = c_r(r)
    seq = join(cr, complement(cr))
    seq.descriptor = ("xr", _fmt(r))
    return seq


def _fmt(r: Fraction) -> str:
    return f"{r.numerator}/{r.denominator}"


# -- rank machinery -----------------------------------------------------------

class PrefixRanks:
    """Append-only cache of the prefix counts ``|A ↾ x|`` of one sequence.

    Extension is guarded by a lock and only ever replaces the table with a
    longer one, so concurrent readers see a consistent (possibly shorter)
    table and the fill is idempotent.
    """

    def __init__(self, seq: BitSequence, cap: Optional[int] = None):
        self.seq = seq
        self.cap = DEFAULT_CAP if cap is None else cap
        self._cum = np.zeros(1, dtype=np.int64)
        self._lock = threading.Lock()

    def _extend(self, n: int) -> np.ndarray:
        """Make the table cover ``|A ↾ x|`` for all ``x <= n``."""
        cum = self._cum
        if n < len(cum):
            return cum
        check_cap(n, self.cap)
        with self._lock:
            cum = self._cum
            if n < len(cum):
                return cum
            have = len(cum) - 1
            target = min(max(n, 2 * have, 1024), self.cap)
            parts = [cum]
            base = int(cum[-1])
            for start in range(have, target, CHUNK):
                stop = min(target, start + CHUNK)
                c = np.cumsum(self.seq.bits(start, stop), dtype=np.int64) + base
                parts.append(c)
                base = int(c[-1])
            self._cum = cum = np.concatenate(parts)
        return cum

    def rank(self, x: int) -> int:
        """``|A ↾ x|``."""
        if x >= len(self._cum) and self.seq.has_count and x > self.cap:
            return self.seq.count(x)
        return int(self._extend(x)[x])

    def ranks(self, idx: np.ndarray) -> np.ndarray:
        if idx.size == 0:
            return np.zeros(0, dtype=np.int64)
        return self._extend(int(idx.max()))[idx]

    def select(self, r: int) -> int:
        """Position of the element of A with rank ``r`` (0-based)."""
        cum = self._cum
        while int(cum[-1]) <= r:
            have = len(cum) - 1
            if have >= self.cap:
                raise BudgetExceeded(f"fewer than {r + 1} elements below the cap {self.cap}")
            cum = self._extend(min(self.cap, max(2 * have, 1024)))
        return int(np.searchsorted(cum, r + 1, side="left")) - 1


class RelativePartition:
    """Blocks ``L_n^A`` of ``n`` consecutive elements of A (``n >= 1``)."""

    def __init__(self, a: BitSequence, cap: Optional[int] = None):
        self.ranks = PrefixRanks(a, cap)

    def block(self, n: int) -> tuple[int, int]:
        """``(min L_n^A, max L_n^A)``."""
        if n < 1:
            raise ValueError("L_0^A is empty")
        first = n * (n - 1) // 2
        return self.ranks.select(first), self.ranks.select(first + n - 1)

    def k(self, n: int) -> int:
        """``k_n^A = max(L_n^A) + 1``."""
        return self.ranks.select(n * (n + 1) // 2 - 1) + 1


def geodesic_within(a: BitSequence, s, cap: Optional[int] = None) -> BitSequence:
    """``f(s)``: the first ``⌊s·n⌋`` elements of every block ``L_n^A``.

    An element of A with rank ``j`` (0-based) falls in block ``n`` at offset
    ``j - n(n-1)/2``, which is exactly the triangular partition applied to
    ranks; so ``f(s) = {x ∈ A : rank_A(x) ∈ C_s}``.
    """
    s = as_unit_rational(s)
    ranks = PrefixRanks(a, cap)
    cs = c_r(s)

    def bit(x: int) -> int:
        return cs(ranks.rank(x)) if a(x) else 0

    def vec(idx: np.ndarray) -> np.ndarray:
        return a.at(idx) & cs.at(ranks.ranks(idx))

    return BitSequence(bit, ("geo", a.descriptor, _fmt(s)), vec)


Rationals = Union[Sequence, Callable[[int], object]]


def d_set(q: Rationals) -> BitSequence:
    """``D``: on each ``L_i`` the first ``⌊q_i·i⌋`` positions.

    ``q`` is indexed by the block number ``i >= 1`` (``q[0]`` is unused) and
    may be a sequence or a function of ``i``.
    """
    if callable(q) and not isinstance(q, (list, tuple)):
        get = q
        tag = q
    else:
        q = list(q)
        tag = tuple(str(Fraction(v)) for v in q)

        def get(i: int):
            if i >= len(q):
                raise BudgetExceeded(f"rational list has no entry for block L_{i}")
            return q[i]

    def threshold(i: int) -> int:
        qi = as_unit_rational(get(i))
        return qi.numerator * i // qi.denominator

    def bit(n: int) -> int:
        i, off = TriangularPartition.block_of(n)
        return 1 if off < threshold(i) else 0

    def vec(idx: np.ndarray) -> np.ndarray:
        i, off = TriangularPartition.block_of_array(idx)
        th = gather(lambda u: np.array([threshold(int(v)) for v in u], dtype=np.int64), i)
        return (off < th).astype(np.uint8)

    return BitSequence(bit, ("dset", tag), vec)


def rational_geodesic(a: BitSequence, q: Rationals) -> BitSequence:
    """``B = A ∩ D`` where ``D`` is built from the rationals ``q_i``."""
    seq = intersect(a, d_set(q))
    seq.descriptor = ("rgeo", a.descriptor, seq.descriptor[2])
    return seq


class DisagreementList:
    """Increasing enumeration ``p_0 < p_1 < …`` of ``A △ B``."""

    def __init__(self, a: BitSequence, b: BitSequence, cap: Optional[int] = None):
        self.ranks = PrefixRanks(symdiff(a, b), cap)

    def __getitem__(self, i: int) -> int:
        return self.ranks.select(i)

    def count_below(self, n: int) -> int:
        return self.ranks.rank(n)


def midpoint_family(a: BitSequence, b: BitSequence, x: BitSequence, cap: Optional[int] = None) -> BitSequence:
    """``F(X)``: copy the common value where A and B agree; at the i-th
    disagreement copy A when ``i ∈ X`` and B otherwise.

    For every ``n``, ``|(A △ F(X)) ↾ n| = |¬X ↾ k|`` with
    ``k = |(A △ B) ↾ n|``.
    """
    dis = DisagreementList(a, b, cap)

    def bit(n: int) -> int:
        an, bn = a(n), b(n)
        if an == bn:
            return an
        return an if x(dis.count_below(n)) else bn

    def vec(idx: np.ndarray) -> np.ndarray:
        av, bv = a.at(idx), b.at(idx)
        out = av.copy()
        diff = av != bv
        if diff.any():
            ranks = dis.ranks.ranks(idx[diff])
            xs = x.at(ranks)
            out[diff] = np.where(xs == 1, av[diff], bv[diff])
        return out

    return BitSequence(bit, ("mid", a.descriptor, b.descriptor, x.descriptor), vec)
