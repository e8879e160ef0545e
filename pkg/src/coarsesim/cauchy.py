"""Strongly Cauchy sequences of sets and their spliced limits.

A list ``C_0, C_1, …`` is strongly Cauchy when ``δ(C_m, C_n) <= 2^-m`` for
all ``m < n``.  The limit is assembled block by block on the dyadic
intervals ``J_k``: block ``k`` is copied from the latest member that is
trusted there.  All verdicts are finite evidence over a declared grid or a
declared range of blocks.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .codings import J_FAMILY
from .density import CheckpointGrid, block_bounds, delta_estimate, factor2_check
from .seq import BitSequence, check_cap, symdiff

DEFAULT_TRUST_SLACK = Fraction(2)


class NotCauchyError(ValueError):
    """No strongly Cauchy subsequence is visible within the evidence horizon."""


@dataclass(frozen=True)
class PairDistance:
    m: int
    n: int
    value: Fraction
    bound: Fraction
    ok: bool


@dataclass(frozen=True)
class CauchyReport:
    pairs: tuple
    certified_upto: int

    @property
    def passed(self) -> bool:
        return all(p.ok for p in self.pairs)

    def failures(self) -> list[PairDistance]:
        return [p for p in self.pairs if not p.ok]


class _DistanceTable:
    def __init__(self, seqs: Sequence[BitSequence], grid: CheckpointGrid, cap: Optional[int]):
        self.seqs = list(seqs)
        self.grid = grid
        self.cap = cap
        self._memo: dict[tuple[int, int], Fraction] = {}

    def __call__(self, m: int, n: int) -> Fraction:
        key = (min(m, n), max(m, n))
        if key not in self._memo:
            self._memo[key] = delta_estimate(self.seqs[key[0]], self.seqs[key[1]], self.grid, self.cap)[0]
        return self._memo[key]


def strong_cauchy_check(seqs: Sequence[BitSequence], grid: CheckpointGrid, cap: Optional[int] = None) -> CauchyReport:
    """Tabulate ``tail_max ρ(C_m △ C_n)`` for all ``m < n`` against ``2^-m``."""
    if len(seqs) < 2:
        raise ValueError("need at least two sequences")
    dist = _DistanceTable(seqs, grid, cap)
    pairs = []
    for m in range(len(seqs)):
        bound = Fraction(1, 1 << m)
        for n in range(m + 1, len(seqs)):
            v = dist(m, n)
            pairs.append(PairDistance(m, n, v, bound, v <= bound))
    return CauchyReport(tuple(pairs), grid.checkpoints()[-1])


def extract_strong_subsequence(
    seqs: Sequence[BitSequence], grid: CheckpointGrid, cap: Optional[int] = None
) -> list[int]:
    """Indices ``i_0 < i_1 < …`` with observed distance ``< 2^-(m+1)``
    between ``C_{i_m}`` and every later member of the list.

    ``i_m`` is the first index after ``i_{m-1}`` whose distance to *all*
    later members is below ``2^-(m+1)``, so the bound holds in particular
    between ``i_m`` and every later selected index.  Fewer than two selected
    indices means the list does not look Cauchy over this grid.
    """
    dist = _DistanceTable(seqs, grid, cap)
    chosen: list[int] = []
    start = 0
    total = len(seqs)
    while start < total:
        bound = Fraction(1, 1 << (len(chosen) + 1))
        for i in range(start, total):
            if all(dist(i, n) < bound for n in range(i + 1, total)):
                chosen.append(i)
                start = i + 1
                break
        else:
            break
    if len(chosen) < 2:
        raise NotCauchyError(
            f"no strongly Cauchy subsequence of length >= 2 among {total} members up to n = {grid.checkpoints()[-1]}"
        )
    return chosen


@dataclass
class SpliceMap:
    """Per-block choice ``k -> n(k)`` of the member copied onto ``J_k``.

    ``n(k)`` is the largest ``n <= min(k, len(seqs) - 1)`` such that
    ``d_k(C_m △ C_n) <= 2^-m · trust_slack`` for every ``m < n``; ``n = 0``
    always qualifies.  Entries are filled lazily and never change.
    """

    seqs: Sequence[BitSequence]
    trust_slack: Fraction = DEFAULT_TRUST_SLACK
    cap: Optional[int] = None
    _choice: dict = field(default_factory=dict, repr=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def trusted(self, k: int, n: int) -> bool:
        lo, hi = block_bounds(k)
        check_cap(hi - lo, self.cap)
        idx = np.arange(lo, hi, dtype=np.int64)
        cn = self.seqs[n].at(idx)
        for m in range(n):
            diff = int((self.seqs[m].at(idx) ^ cn).sum(dtype=np.int64))
            # diff / 2^k <= slack / 2^m
            if Fraction(diff << m, 1 << k) > self.trust_slack:
                return False
        return True

    def source(self, k: int) -> int:
        if k in self._choice:
            return self._choice[k]
        n = min(k, len(self.seqs) - 1)
        while n > 0 and not self.trusted(k, n):
            n -= 1
        with self._lock:
            self._choice.setdefault(k, n)
        return self._choice[k]

    def table(self, K: int) -> dict[int, int]:
        return {k: self.source(k) for k in range(K + 1)}


def splice_limit(
    seqs: Sequence[BitSequence], trust_slack=DEFAULT_TRUST_SLACK, cap: Optional[int] = None
) -> tuple[BitSequence, SpliceMap]:
    """The blockwise limit: ``C ↾ J_k = C_{n(k)} ↾ J_k``."""
    seqs = list(seqs)
    if not seqs:
        raise ValueError("cannot splice an empty list")
    smap = SpliceMap(seqs, Fraction(trust_slack), cap)

    def bit(x: int) -> int:
        k = (x + 1).bit_length() - 1
        return seqs[smap.source(k)](x)

    def vec(idx: np.ndarray) -> np.ndarray:
        ks = J_FAMILY.index_array(idx)
        out = np.empty(idx.shape, dtype=np.uint8)
        for k in np.unique(ks):
            sel = ks == k
            out[sel] = seqs[smap.source(int(k))].at(idx[sel])
        return out

    desc = ("limit", tuple(s.descriptor for s in seqs), str(smap.trust_slack))
    return BitSequence(bit, desc, vec), smap


@dataclass(frozen=True)
class ConvergenceRow:
    m: int
    tail_max: Fraction
    bound: Fraction
    flagged: bool


def convergence_report(
    seqs: Sequence[BitSequence],
    limit: BitSequence,
    grid: CheckpointGrid,
    slack=DEFAULT_TRUST_SLACK,
    cap: Optional[int] = None,
) -> list[ConvergenceRow]:
    """``tail_max ρ(C_m △ limit)`` per member, flagged above ``2^(1-m)·slack``."""
    rows = []
    for m, s in enumerate(seqs):
        value = delta_estimate(s, limit, grid, cap)[0]
        bound = Fraction(2, 1 << m) * Fraction(slack)
        rows.append(ConvergenceRow(m, value, bound, value > bound))
    return rows


def factor2_transfer(seqs: Sequence[BitSequence], limit: BitSequence, K: int, cap: Optional[int] = None) -> bool:
    """Factor-2 inequalities for every ``C_m △ limit`` over blocks ``0..K``."""
    return all(factor2_check(symdiff(s, limit), K, cap).passed for s in seqs)
