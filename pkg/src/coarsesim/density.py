"""Exact prefix and block densities, and the density-metric estimator.

All densities are :class:`fractions.Fraction`.  Upper and lower density are
limits and cannot be computed; instead every estimate is taken over a
declared :class:`CheckpointGrid` and the tail maximum/minimum over the
checkpoints at or beyond ``warmup`` stand in for lim sup/lim inf.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .seq import (
    BitSequence,
    check_cap,
    complement,
    count_ones,
    count_range,
    cumulative_counts,
    descriptor_names,
    prefix_counts,
    symagree,
    symdiff,
)

GRID_KINDS = ("linear", "geometric", "factorial", "dyadic", "triangular", "explicit")


@dataclass(frozen=True)
class CheckpointGrid:
    """A finite, strictly increasing list of prefix lengths.

    ``param`` is the step for ``linear``, the ratio for ``geometric`` and
    the point tuple for ``explicit``; other kinds ignore it.  Linear and
    geometric grids always end at ``limit``.
    """

    kind: str
    limit: int
    warmup: int = 1
    param: object = None

    def __post_init__(self):
        if self.kind not in GRID_KINDS:
            raise ValueError(f"unknown grid kind {self.kind!r}")
        if self.limit < 1:
            raise ValueError("grid limit must be positive")
        if not 0 <= self.warmup <= self.limit:
            raise ValueError(f"warmup {self.warmup} must lie in [0, limit={self.limit}]")

    def checkpoints(self) -> list[int]:
        limit = self.limit
        if self.kind == "linear":
            step = int(self.param or 1)
            if step < 1:
                raise ValueError("linear step must be positive")
            pts = list(range(step, limit + 1, step))
        elif self.kind == "geometric":
            ratio = Fraction(self.param or Fraction(5, 4))
            if ratio <= 1:
                raise ValueError("geometric ratio must exceed 1")
            pts, n = [], 1
            while n <= limit:
                pts.append(n)
                n = max(n + 1, math.floor(n * ratio))
        elif self.kind == "factorial":
            pts, n, f = [], 1, 1
            while f <= limit:
                if not pts or pts[-1] != f:
                    pts.append(f)
                n += 1
                f *= n
        elif self.kind == "dyadic":
            pts, p = [], 1
            while p <= limit:
                pts.append(p)
                p <<= 1
        elif self.kind == "triangular":
            # m_i = i(i-1)/2, the left ends of the blocks L_i (i >= 2)
            pts, i = [], 2
            while i * (i - 1) // 2 <= limit:
                pts.append(i * (i - 1) // 2)
                i += 1
        else:
            pts = sorted({int(p) for p in self.param if 1 <= int(p) <= limit})
        if self.kind in ("linear", "geometric") and (not pts or pts[-1] != limit):
            pts.append(limit)
        return pts

    @classmethod
    def default(cls) -> CheckpointGrid:
        return cls("geometric", 1 << 20, 1 << 10, Fraction(5, 4))


def grid_for(seq: BitSequence, limit: Optional[int] = None, warmup: Optional[int] = None) -> CheckpointGrid:
    """Pick the natural checkpoints for ``seq``.

    Factorial when the construction contains an I-coding (or the diagonal
    construction built on it), dyadic for a J-coding, geometric otherwise.
    """
    names = descriptor_names(seq.descriptor)
    if names & {"icode", "diag", "antichain"}:
        return CheckpointGrid("factorial", limit or math.factorial(10), warmup or 1)
    if "jcode" in names:
        return CheckpointGrid("dyadic", limit or 1 << 20, warmup or 1)
    base = CheckpointGrid.default()
    limit = limit or base.limit
    if warmup is None:
        warmup = min(base.warmup, limit)
    return CheckpointGrid("geometric", limit, warmup, base.param)


@dataclass(frozen=True)
class DensityPoint:
    n: int
    count: int
    rho: Fraction


@dataclass(frozen=True)
class DensityProfile:
    points: tuple
    tail_max: Fraction
    tail_min: Fraction
    warmup: int = 1

    @property
    def horizon(self) -> int:
        """Largest checkpoint examined."""
        return self.points[-1].n if self.points else 0

    def tail(self) -> list[DensityPoint]:
        pts = [p for p in self.points if p.n >= self.warmup]
        return pts or list(self.points)


@dataclass(frozen=True)
class BlockDensity:
    k: int
    count: int
    d: Fraction = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "d", Fraction(self.count, 1 << self.k))


def rho_at(seq: BitSequence, n: int, cap: Optional[int] = None) -> Fraction:
    """``ρ_n(A) = |A ↾ n| / n``."""
    if n < 1:
        raise ValueError("density is defined for n >= 1")
    return Fraction(count_ones(seq, n, cap), n)


def complement_identity_check(seq: BitSequence, n: int, cap: Optional[int] = None) -> bool:
    return rho_at(seq, n, cap) + rho_at(complement(seq), n, cap) == 1


def block_bounds(k: int) -> tuple[int, int]:
    """Half-open bounds of ``J_k = [2^k - 1, 2^(k+1) - 1)``."""
    return (1 << k) - 1, (1 << (k + 1)) - 1


def block_density(seq: BitSequence, k: int, cap: Optional[int] = None) -> BlockDensity:
    """``d_k(C) = |C ∩ J_k| / 2^k``."""
    lo, hi = block_bounds(k)
    return BlockDensity(k, count_range(seq, lo, hi, cap))


def density_profile(seq: BitSequence, grid: CheckpointGrid, cap: Optional[int] = None) -> DensityProfile:
    pts = grid.checkpoints()
    counts = prefix_counts(seq, pts, cap)
    points = tuple(DensityPoint(n, c, Fraction(c, n)) for n, c in zip(pts, counts))
    tail = [p.rho for p in points if p.n >= grid.warmup] or [p.rho for p in points]
    return DensityProfile(points, max(tail), min(tail), grid.warmup)


def delta_estimate(
    a: BitSequence, b: BitSequence, grid: CheckpointGrid, cap: Optional[int] = None
) -> tuple[Fraction, DensityProfile]:
    """Tail maximum of ``ρ_n(a △ b)``: the finite surrogate of ``δ(a, b)``."""
    prof = density_profile(symdiff(a, b), grid, cap)
    return prof.tail_max, prof


@dataclass(frozen=True)
class Factor2Row:
    k: int
    d_k: Fraction
    rho_dyadic: Fraction  # ρ_{2^{k+1}}
    lower_ok: bool  # d_k ≤ 2 ρ_{2^{k+1}}
    upper_ok: bool  # ρ_m < 2 max_{i≤k} d_i for every m with m-1 ∈ J_k
    degenerate: bool


@dataclass(frozen=True)
class Factor2Report:
    rows: tuple

    @property
    def passed(self) -> bool:
        return all(r.lower_ok and r.upper_ok for r in self.rows)


def factor2_check(seq: BitSequence, K: int, cap: Optional[int] = None) -> Factor2Report:
    """Check the finite inequalities that relate prefix and block densities.

    For every ``k <= K``: ``d_k ≤ 2·ρ_{2^{k+1}}``, and for every ``m`` with
    ``2^k <= m < 2^{k+1}``: ``ρ_m < 2·max_{i<=k} d_i``.  When all of
    ``d_0 .. d_k`` vanish the strict form is vacuous and the row instead
    requires ``|C ↾ m| = 0`` (the prefix lies inside ``J_0 ∪ … ∪ J_k``).
    """
    top = 1 << (K + 1)
    check_cap(top, cap)
    cum = cumulative_counts(seq, top, cap)
    rows = []
    best_num, best_k = 0, 0  # max d_i as best_num / 2^best_k
    for k in range(K + 1):
        lo, hi = block_bounds(k)
        c = int(cum[hi] - cum[lo])
        if Fraction(c, 1 << k) > Fraction(best_num, 1 << best_k):
            best_num, best_k = c, k
        d_k = Fraction(c, 1 << k)
        rho2 = Fraction(int(cum[1 << (k + 1)]), 1 << (k + 1))
        lower_ok = d_k <= 2 * rho2
        ms = np.arange(1 << k, 1 << (k + 1), dtype=np.int64)
        counts = cum[ms]
        if best_num == 0:
            degenerate = True
            upper_ok = bool(np.all(counts == 0))
        else:
            degenerate = False
            # counts/m < 2 * best_num / 2^best_k   <=>   counts * 2^best_k < 2 * best_num * m
            upper_ok = bool(np.all(counts * (1 << best_k) < 2 * best_num * ms))
        rows.append(Factor2Row(k, d_k, rho2, lower_ok, upper_ok, degenerate))
    return Factor2Report(tuple(rows))


def gamma_lower_estimate(
    target: BitSequence, describers: Sequence[BitSequence], grid: CheckpointGrid, cap: Optional[int] = None
) -> Fraction:
    """Best tail-minimum agreement density of ``target`` with any describer.

    A finite, describer-restricted lower-evidence surrogate of the coarse
    computability bound.
    """
    if not describers:
        raise ValueError("need at least one describer")
    return max(density_profile(symagree(target, d), grid, cap).tail_min for d in describers)


def rho_float(x: Fraction) -> str:
    """Display form with 15 significant digits."""
    return f"{float(x):.15g}"
