"""Infinite binary sequences represented as pure evaluators.

A :class:`BitSequence` is a total function from nonnegative integers
(arbitrary precision) to ``{0, 1}``, together with a descriptor tree that
records how it was built.  Two evaluation paths exist:

* ``seq(n)`` works for any Python ``int`` ``n >= 0``.
* ``seq.at(idx)`` takes a NumPy ``int64`` index array and returns a
  ``uint8`` array.  It is the fast path used for prefix scans; every
  combinator supplies a vectorised implementation so scans of a few million
  bits stay cheap.

Sequences may also carry an exact popcount shortcut (``seq.count(n)``) which
lets density queries run at indices far beyond anything materialisable.

>>> prefix(evens(), 6)
'101010'
>>> prefix(join(empty(), full()), 6)
'010101'
"""

from __future__ import annotations

import bisect
import operator
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

#: Largest prefix (in bits) that may be materialised unless a caller overrides it.
DEFAULT_CAP = 1 << 26

#: Scan chunk for prefix counting.
CHUNK = 1 << 20

_MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15

BitFn = Callable[[int], int]
VecFn = Callable[[np.ndarray], np.ndarray]
CountFn = Callable[[int], int]


class BudgetExceeded(ValueError):
    """Raised when a query would materialise more bits than allowed."""


def check_cap(n: int, cap: Optional[int]) -> None:
    limit = DEFAULT_CAP if cap is None else cap
    if n > limit:
        raise BudgetExceeded(f"{n} bits requested, materialisation cap is {limit}")


class BitSequence:
    """A subset of the natural numbers given by its characteristic function.

    ``bit`` is the pointwise evaluator, ``vec`` an optional vectorised one
    and ``count`` an optional exact popcount of ``[0, n)``.  ``descriptor``
    is a nested tuple ``(name, *args)`` used for display and hashing.
    Equality compares descriptors only; set equality is undecidable.
    """

    __slots__ = ("_bit", "_vec", "_count", "descriptor")

    def __init__(
        self,
        bit: BitFn,
        descriptor: tuple,
        vec: Optional[VecFn] = None,
        count: Optional[CountFn] = None,
    ):
        self._bit = bit
        self._vec = vec
        self._count = count
        self.descriptor = descriptor

    def __call__(self, n: int) -> int:
        n = operator.index(n)
        if n < 0:
            raise ValueError(f"negative index {n}")
        return self._bit(n)

    def at(self, idx: np.ndarray) -> np.ndarray:
        """Evaluate at every index of an ``int64`` array."""
        idx = np.asarray(idx, dtype=np.int64)
        if idx.size == 0:
            return np.zeros(0, dtype=np.uint8)
        if self._vec is not None:
            return self._vec(idx)
        bit = self._bit
        return np.fromiter((bit(int(i)) for i in idx.ravel()), dtype=np.uint8, count=idx.size).reshape(idx.shape)

    def bits(self, start: int, stop: int) -> np.ndarray:
        return self.at(np.arange(start, stop, dtype=np.int64))

    def count(self, n: int) -> Optional[int]:
        """Exact ``|A ↾ n|`` if a closed form is known, else ``None``."""
        if self._count is None:
            return None
        return self._count(n)

    @property
    def has_count(self) -> bool:
        return self._count is not None

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, BitSequence):
            return NotImplemented
        return self.descriptor == other.descriptor

    def __hash__(self) -> int:
        return hash(self.descriptor)

    def __repr__(self) -> str:
        return f"BitSequence({describe(self.descriptor)})"

    def __str__(self) -> str:
        return describe(self.descriptor)

    def __invert__(self) -> BitSequence:
        return complement(self)

    def __xor__(self, other: BitSequence) -> BitSequence:
        return symdiff(self, other)

    def __and__(self, other: BitSequence) -> BitSequence:
        return intersect(self, other)

    def __or__(self, other: BitSequence) -> BitSequence:
        return union(self, other)


def describe(desc) -> str:
    """Render a descriptor tree in the set-specification syntax."""
    if isinstance(desc, BitSequence):
        return describe(desc.descriptor)
    if not isinstance(desc, tuple):
        return str(desc)
    name, *args = desc
    if name in ("empty", "full", "evens"):
        return name
    if name == "finite":
        return "finite:{" + ",".join(str(v) for v in args[0]) + "}"
    if name in ("periodic", "rand", "cr", "xr", "treepath"):
        return f"{name}:{args[0]}"
    return f"{name}(" + ", ".join(describe(a) for a in args) + ")"


def descriptor_names(desc) -> set:
    """All combinator/atom names occurring in a descriptor tree."""
    out = set()
    stack = [desc]
    while stack:
        d = stack.pop()
        if isinstance(d, BitSequence):
            d = d.descriptor
        if isinstance(d, tuple) and d and isinstance(d[0], str):
            out.add(d[0])
            stack.extend(d[1:])
        elif isinstance(d, (list, tuple)):
            stack.extend(d)
    return out


# -- vector helpers ---------------------------------------------------------

def bit_length(arr: np.ndarray) -> np.ndarray:
    """Vectorised ``int.bit_length`` for nonnegative ``int64`` values below 2**62."""
    arr = np.asarray(arr, dtype=np.int64)
    _, e = np.frexp(arr.astype(np.float64))
    e = e.astype(np.int64)
    # float rounding can push values just below a power of two up by one
    too_big = (e > 0) & ((arr >> np.maximum(e - 1, 0)) == 0)
    return np.where(too_big, e - 1, e)


def two_adic_valuation(arr: np.ndarray) -> np.ndarray:
    """Exponent of the largest power of two dividing each (positive) entry."""
    arr = np.asarray(arr, dtype=np.int64)
    return bit_length(arr & -arr) - 1


def gather(values: Callable[[np.ndarray], np.ndarray], keys: np.ndarray) -> np.ndarray:
    """Evaluate ``values`` once per distinct key and broadcast back."""
    uniq, inv = np.unique(keys, return_inverse=True)
    return values(uniq)[inv.reshape(keys.shape)]


# -- atoms ------------------------------------------------------------------

def _const(v: int, name: str) -> BitSequence:
    def vec(idx: np.ndarray) -> np.ndarray:
        return np.full(idx.shape, v, dtype=np.uint8)

    return BitSequence(lambda n: v, (name,), vec, lambda n: v * n)


def empty() -> BitSequence:
    return _const(0, "empty")


def full() -> BitSequence:
    return _const(1, "full")


def periodic(pattern: str) -> BitSequence:
    """The sequence repeating ``pattern`` forever (``periodic("011")`` → 011011…)."""
    if not pattern or set(pattern) - {"0", "1"}:
        raise ValueError(f"periodic pattern must be a nonempty bit string, got {pattern!r}")
    table = np.frombuffer(pattern.encode(), dtype=np.uint8) - ord("0")
    period = len(pattern)
    cum = [0]
    for ch in pattern:
        cum.append(cum[-1] + (ch == "1"))

    def count(n: int) -> int:
        q, r = divmod(n, period)
        return q * cum[-1] + cum[r]

    return BitSequence(
        lambda n: int(pattern[n % period]),
        ("periodic", pattern),
        lambda idx: table[idx % period],
        count,
    )


def evens() -> BitSequence:
    seq = periodic("10")
    seq.descriptor = ("evens",)
    return seq


def odds() -> BitSequence:
    return periodic("01")


def finite(elements: Iterable[int]) -> BitSequence:
    """The finite set with the given elements."""
    members = tuple(sorted({operator.index(e) for e in elements}))
    if members and members[0] < 0:
        raise ValueError("finite sets live in the natural numbers")
    lookup = frozenset(members)
    small = np.array([m for m in members if m < 1 << 62], dtype=np.int64)

    def vec(idx: np.ndarray) -> np.ndarray:
        return np.isin(idx, small).astype(np.uint8)

    def count(n: int) -> int:
        return bisect.bisect_left(members, n)

    return BitSequence(lambda n: int(n in lookup), ("finite", members), vec, count)


def from_predicate(pred: Callable[[int], bool], name: str = "pred") -> BitSequence:
    """Wrap an arbitrary total predicate (pointwise only, no fast path)."""
    return BitSequence(lambda n: 1 if pred(n) else 0, (name, pred))


# -- counter-mode pseudo-random stream ---------------------------------------
#
# Word w of stream ``seed`` is the SplitMix64 finaliser applied to
# ``key + w * GAMMA (mod 2**64)`` where ``key = mix64(seed)``.  Words with
# w >= 2**64 fold their 64-bit limbs (little endian) through the same step.
# Bit n is bit (n mod 64) of word n // 64.

def _mix64(z: int) -> int:
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def _mix64_vec(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


def _stream_word(key: int, w: int) -> int:
    state = key
    while True:
        state = _mix64((state + (w & _MASK64) * _GAMMA) & _MASK64)
        w >>= 64
        if not w:
            return state


def bernoulli_stream(seed: int) -> BitSequence:
    """Deterministic fair-coin stream; ``evaluate(n)`` needs no history."""
    seed = operator.index(seed)
    key = _mix64(seed & _MASK64)

    def bit(n: int) -> int:
        return (_stream_word(key, n >> 6) >> (n & 63)) & 1

    def vec(idx: np.ndarray) -> np.ndarray:
        w = (idx >> 6).astype(np.uint64)
        with np.errstate(over="ignore"):
            words = _mix64_vec(np.uint64(key) + w * np.uint64(_GAMMA))
        return ((words >> (idx & 63).astype(np.uint64)) & np.uint64(1)).astype(np.uint8)

    return BitSequence(bit, ("rand", seed), vec)


# -- combinators --------------------------------------------------------------

def complement(a: BitSequence) -> BitSequence:
    count = None
    if a.has_count:
        count = lambda n: n - a.count(n)  # noqa: E731
    return BitSequence(lambda n: 1 - a(n), ("not", a.descriptor), lambda idx: 1 - a.at(idx), count)


def symdiff(a: BitSequence, b: BitSequence) -> BitSequence:
    return BitSequence(
        lambda n: a(n) ^ b(n), ("symdiff", a.descriptor, b.descriptor), lambda idx: a.at(idx) ^ b.at(idx)
    )


def symagree(a: BitSequence, b: BitSequence) -> BitSequence:
    return BitSequence(
        lambda n: 1 - (a(n) ^ b(n)),
        ("agree", a.descriptor, b.descriptor),
        lambda idx: 1 - (a.at(idx) ^ b.at(idx)),
    )


def intersect(a: BitSequence, b: BitSequence) -> BitSequence:
    return BitSequence(
        lambda n: a(n) & b(n), ("cap", a.descriptor, b.descriptor), lambda idx: a.at(idx) & b.at(idx)
    )


def union(a: BitSequence, b: BitSequence) -> BitSequence:
    return BitSequence(
        lambda n: a(n) | b(n), ("cup", a.descriptor, b.descriptor), lambda idx: a.at(idx) | b.at(idx)
    )


def join(a: BitSequence, b: BitSequence) -> BitSequence:
    """Interleave: even positions read ``a``, odd positions read ``b``."""

    def bit(n: int) -> int:
        return b(n >> 1) if n & 1 else a(n >> 1)

    def vec(idx: np.ndarray) -> np.ndarray:
        out = np.empty(idx.shape, dtype=np.uint8)
        odd = (idx & 1).astype(bool)
        out[~odd] = a.at(idx[~odd] >> 1)
        out[odd] = b.at(idx[odd] >> 1)
        return out

    count = None
    if a.has_count and b.has_count:
        count = lambda n: a.count((n + 1) >> 1) + b.count(n >> 1)  # noqa: E731
    return BitSequence(bit, ("join", a.descriptor, b.descriptor), vec, count)


def truncate(a: BitSequence, k: int) -> BitSequence:
    """``A ∩ [0, k]``."""
    k = operator.index(k)

    def vec(idx: np.ndarray) -> np.ndarray:
        out = np.zeros(idx.shape, dtype=np.uint8)
        keep = idx <= k
        out[keep] = a.at(idx[keep])
        return out

    count = None
    if a.has_count:
        count = lambda n: a.count(min(n, k + 1))  # noqa: E731
    return BitSequence(lambda n: a(n) if n <= k else 0, ("trunc", a.descriptor, k), vec, count)


# -- materialisation ---------------------------------------------------------

def prefix(seq: BitSequence, n: int, cap: Optional[int] = None) -> str:
    """Bits ``0 .. n-1`` as a ``'0'/'1'`` string."""
    check_cap(n, cap)
    return (seq.bits(0, n) + ord("0")).tobytes().decode()


def count_ones(seq: BitSequence, n: int, cap: Optional[int] = None) -> int:
    """``|A ↾ n|``, via the closed form when available, else by scanning."""
    c = seq.count(n)
    if c is not None:
        return c
    check_cap(n, cap)
    total = 0
    for start in range(0, n, CHUNK):
        total += int(seq.bits(start, min(n, start + CHUNK)).sum(dtype=np.int64))
    return total


def count_range(seq: BitSequence, start: int, stop: int, cap: Optional[int] = None) -> int:
    """``|A ∩ [start, stop)|``."""
    if seq.has_count:
        return seq.count(stop) - seq.count(start)
    check_cap(stop - start, cap)
    total = 0
    for s in range(start, stop, CHUNK):
        total += int(seq.bits(s, min(stop, s + CHUNK)).sum(dtype=np.int64))
    return total


def cumulative_counts(seq: BitSequence, n: int, cap: Optional[int] = None) -> np.ndarray:
    """Array ``c`` of length ``n + 1`` with ``c[j] = |A ↾ j|``."""
    check_cap(n, cap)
    out = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(seq.bits(0, n), dtype=np.int64, out=out[1:])
    return out


def prefix_counts(seq: BitSequence, checkpoints: Sequence[int], cap: Optional[int] = None) -> list[int]:
    """Exact ``|A ↾ n|`` for every ``n`` in an increasing list of checkpoints.

    One sequential pass over the prefix; chunk counts are merged by addition,
    so the result is identical to a single scan.
    """
    if not checkpoints:
        return []
    if seq.has_count:
        return [seq.count(n) for n in checkpoints]
    top = checkpoints[-1]
    check_cap(top, cap)
    out = []
    base = 0
    it = iter(checkpoints)
    nxt = next(it)
    start = 0
    while nxt is not None:
        stop = min(top, start + CHUNK)
        chunk = np.cumsum(seq.bits(start, stop), dtype=np.int64)
        while nxt is not None and nxt <= stop:
            out.append(base + (int(chunk[nxt - start - 1]) if nxt > start else 0))
            nxt = next(it, None)
        if stop > start:
            base += int(chunk[-1])
        start = stop
    return out
