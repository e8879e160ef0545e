"""A computable perfect tree whose paths, and pairwise differences, have density 1/2.

Level ``n`` of the tree occupies positions ``[l_n, l_{n+1})`` with
``l_0 = 0`` and ``l_{n+1} = l_n + 2^(2^(n+4))``.  A node ``σ`` of length
``n`` followed by direction ``i`` fills that whole segment with a power of
``μ_j = 0^(2^j) 1^(2^j)``, where ``j = 2k + i - 1`` and ``k`` is the 1-based
lexicographic rank of ``σ`` among the strings of length ``n``.  Hence
``j = 2·int(σ, 2) + 1 + i``.

Bit ``o`` of a power of ``μ_j`` is simply bit ``j`` of the offset ``o``, so
every query below is exact integer arithmetic; segment lengths such as
``2^(2^12)`` are never materialised.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .seq import BitSequence, BudgetExceeded

#: Deepest level a query may reach unless overridden.
DEFAULT_DEPTH_CAP = 8


class DepthCapExceeded(BudgetExceeded):
    pass


def segment_length(n: int) -> int:
    """``l_{n+1} - l_n = 2^(2^(n+4))``."""
    return 1 << (1 << (n + 4))


@functools.lru_cache(maxsize=None)
def level_start(n: int) -> int:
    """``l_n``."""
    return 0 if n == 0 else level_start(n - 1) + segment_length(n - 1)


def good_stride(n: int) -> int:
    """Stride of good lengths on segment n: ``2^(2^(n+1)+1)``, the length of
    the longest ``μ`` used there (``μ_{2^(n+1)}``)."""
    return 1 << ((1 << (n + 1)) + 1)


def level_of(m: int, depth_cap: int = DEFAULT_DEPTH_CAP) -> int:
    """The level ``n`` with ``l_n <= m < l_{n+1}``."""
    n = 0
    while m >= level_start(n + 1):
        n += 1
        if n >= depth_cap:
            raise DepthCapExceeded(f"index {m} lies beyond level {depth_cap - 1}")
    return n


def mu_bit(j: int, offset: int) -> int:
    """Bit at ``offset`` of a power of ``μ_j``."""
    return (offset >> j) & 1


def mu_string(j: int) -> str:
    return "0" * (1 << j) + "1" * (1 << j)


def mu_popcount(j: int, x: int) -> int:
    """Ones among the first ``x`` bits of a power of ``μ_j``."""
    half = 1 << j
    return (x >> (j + 1)) * half + max(0, (x & ((half << 1) - 1)) - half)


def mu_agreements(i: int, j: int, x: int) -> int:
    """Positions ``< x`` where powers of ``μ_i`` and ``μ_j`` agree."""
    if i == j:
        return x
    if i > j:
        i, j = j, i
    half_j = 1 << j
    # ones shared by both: within each period of μ_j only its upper half can
    # overlap, and there μ_i (period dividing 2^j) restarts from offset 0
    r = x & ((half_j << 1) - 1)
    both = (x >> (j + 1)) * (half_j >> 1) + (mu_popcount(i, r - half_j) if r > half_j else 0)
    differ = mu_popcount(i, x) + mu_popcount(j, x) - 2 * both
    return x - differ


def level_index(sigma: str, n: int) -> int:
    """μ-index used by the node ``sigma ↾ n`` followed by ``sigma[n]``."""
    rank0 = int(sigma[:n], 2) if n else 0
    return 2 * rank0 + 1 + int(sigma[n])


@dataclass(frozen=True)
class TreeCode:
    """Symbolic description of ``T(σ)``: one μ-index per level."""

    directions: str
    indices: tuple

    @property
    def depth(self) -> int:
        return len(self.directions)

    @property
    def length(self) -> int:
        return level_start(self.depth)

    def materialize(self, limit: int = 1 << 20) -> str:
        """Naive concatenation of μ-powers (small depths only)."""
        if self.length > limit:
            raise BudgetExceeded(f"T({self.directions}) has {self.length} bits")
        parts = []
        for n, j in enumerate(self.indices):
            parts.append(mu_string(j) * (segment_length(n) >> (j + 1)))
        return "".join(parts)


def tree_code(sigma: str, depth_cap: int = DEFAULT_DEPTH_CAP) -> TreeCode:
    if set(sigma) - {"0", "1"}:
        raise ValueError(f"directions must be a bit string, got {sigma!r}")
    if len(sigma) > depth_cap:
        raise DepthCapExceeded(f"depth {len(sigma)} exceeds cap {depth_cap}")
    return TreeCode(sigma, tuple(level_index(sigma, n) for n in range(len(sigma))))


def _locate(code: TreeCode, m: int) -> tuple[int, int]:
    if not 0 <= m < code.length:
        raise IndexError(f"index {m} outside T({code.directions}) of length {code.length}")
    n = level_of(m, code.depth)
    return n, m - level_start(n)


def tree_bit(code: TreeCode, m: int) -> int:
    n, off = _locate(code, m)
    return mu_bit(code.indices[n], off)


def tree_prefix_popcount(code: TreeCode, m: int) -> int:
    """``|T(σ) ↾ m|`` for ``m <= |T(σ)|``."""
    if m == code.length:
        return m // 2
    n, off = _locate(code, m)
    return level_start(n) // 2 + mu_popcount(code.indices[n], off)


def pairwise_agreement_count(a: TreeCode, b: TreeCode, m: int) -> int:
    """Positions ``< m`` where ``T(σ)`` and ``T(τ)`` agree."""
    if m > a.length or m > b.length:
        raise ValueError(f"both codes must have length >= {m}")
    total = 0
    for n in range(max(a.depth, b.depth)):
        lo = level_start(n)
        if lo >= m:
            break
        span = min(m, level_start(n + 1)) - lo
        total += mu_agreements(a.indices[n], b.indices[n], span)
    return total


def tree_path(directions: BitSequence, depth_cap: int = DEFAULT_DEPTH_CAP) -> BitSequence:
    """The path through the tree chosen by ``directions``, evaluated lazily."""

    @functools.lru_cache(maxsize=None)
    def index_at(n: int) -> int:
        sigma = "".join(str(directions(t)) for t in range(n + 1))
        return level_index(sigma, n)

    def bit(m: int) -> int:
        n = level_of(m, depth_cap)
        return mu_bit(index_at(n), m - level_start(n))

    def vec(idx: np.ndarray) -> np.ndarray:
        top = int(idx.max())
        bounds = [level_start(n) for n in range(1, depth_cap + 1) if level_start(n) < (1 << 62)]
        levels = np.searchsorted(np.array(bounds, dtype=np.int64), idx, side="right")
        level_of(top, depth_cap)
        out = np.empty(idx.shape, dtype=np.uint8)
        for n in np.unique(levels):
            n = int(n)
            sel = levels == n
            out[sel] = ((idx[sel] - level_start(n)) >> index_at(n)) & 1
        return out

    def count(m: int) -> int:
        if m <= 0:
            return 0
        n = level_of(m - 1, depth_cap)
        return level_start(n) // 2 + mu_popcount(index_at(n), m - level_start(n))

    return BitSequence(bit, ("treepath", directions.descriptor), vec, count)


def cl2_deviation_bound(j: int, depth_cap: int = DEFAULT_DEPTH_CAP) -> tuple[int, int]:
    """``(numerator, j)`` of the bound ``|ρ_j - 1/2| <= b'_n / j`` on level n."""
    n = level_of(max(j - 1, 0), depth_cap)
    return good_stride(n), j
