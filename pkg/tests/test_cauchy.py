from fractions import Fraction

import pytest

from coarsesim.cauchy import (
    NotCauchyError,
    SpliceMap,
    convergence_report,
    extract_strong_subsequence,
    factor2_transfer,
    splice_limit,
    strong_cauchy_check,
)
from coarsesim.codings import approximate_R, code
from coarsesim.density import CheckpointGrid, block_bounds, delta_estimate
from coarsesim.seq import complement, finite, prefix, symdiff
from coarsesim.speclang import build

GRID = CheckpointGrid("dyadic", 1 << 16, 1 << 6)
A = finite([0, 2, 4, 6])


def approximants(a, ks):
    return [approximate_R(a, k) for k in ks]


def same_block(x, y, k):
    lo, hi = block_bounds(k)
    return x.bits(lo, hi).tolist() == y.bits(lo, hi).tolist()


def tail_union(a, m):
    """Exact δ between R(A ∩ [0, m]) and R(A): the R-blocks of larger members."""
    return sum((Fraction(1, 2 ** (j + 1)) for j in range(m + 1, 64) if a(j)), Fraction(0))


def test_constant_list_passes_with_zeros():
    seqs = [build("cr:1/3")] * 4
    report = strong_cauchy_check(seqs, GRID)
    assert report.passed and all(p.value == 0 for p in report.pairs)
    assert report.certified_upto == 1 << 16


def test_distance_one_pair_is_tight_at_m_zero():
    # δ(C_0, C_1) <= 2^0 allows distance 1; the next pair cannot recover
    report = strong_cauchy_check([build("empty"), build("full")], GRID)
    assert [(p.m, p.n, p.value, p.bound) for p in report.pairs] == [(0, 1, 1, 1)]
    report = strong_cauchy_check([build("empty"), build("full"), build("empty")], GRID)
    assert [(p.m, p.n, p.value) for p in report.failures()] == [(1, 2, 1)]


def test_check_needs_two():
    with pytest.raises(ValueError):
        strong_cauchy_check([build("empty")], GRID)


def test_r_approximants_are_strongly_cauchy():
    seqs = approximants(A, [1, 3, 5, 7])
    report = strong_cauchy_check(seqs, GRID)
    assert report.passed
    for p in report.pairs:
        # on the dyadic grid the observed value stays within one block of the exact tail
        exact = tail_union(A, 2 * p.m + 1) - tail_union(A, 2 * p.n + 1)
        assert abs(p.value - exact) <= Fraction(8, 1 << 6)


def test_extract_identity_on_fast_list():
    seqs = [approximate_R(A, 8)] * 3 + [code("R", A)]
    assert extract_strong_subsequence(seqs, GRID) == [0, 1, 2, 3]


def test_extract_identity_on_r_approximants():
    seqs = approximants(build("full"), range(10))
    assert extract_strong_subsequence(seqs, GRID) == list(range(10))


def test_extract_skips_for_margin():
    # δ(C_m, C_n) = 2^-⌈m/2⌉ - 2^-⌈n/2⌉: only odd indices have the extra margin
    from coarsesim.geodesics import c_r

    grid = CheckpointGrid("dyadic", 1 << 18, 1 << 12)
    seqs = [c_r(1 - Fraction(1, 2 ** ((m + 1) // 2))) for m in range(8)]
    chosen = extract_strong_subsequence(seqs, grid)
    assert chosen[:3] == [1, 3, 5]
    for m, i in enumerate(chosen):
        for j in chosen[m + 1 :]:
            assert delta_estimate(seqs[i], seqs[j], grid)[0] < Fraction(1, 2 ** (m + 1))


def test_extract_rejects_non_cauchy():
    with pytest.raises(NotCauchyError):
        extract_strong_subsequence([build("empty"), build("full"), build("empty"), build("full")], GRID)


def test_splice_constant_list():
    c = build("rand:4")
    lim, smap = splice_limit([c, c, c])
    assert prefix(lim, 5000) == prefix(c, 5000)
    assert all(0 <= n <= k for k, n in smap.table(12).items())


def test_splice_recovers_r_code():
    a = finite([0, 2])
    seqs = approximants(a, range(5))
    lim, smap = splice_limit(seqs)
    target = code("R", a)
    table = smap.table(16)
    stable = min(k for k in table if all(table[j] == len(seqs) - 1 for j in range(k, 17)))
    assert stable <= len(seqs)
    for k in range(stable, 17):
        assert same_block(lim, target, k)


def test_splice_is_blockwise_faithful():
    seqs = approximants(A, range(9))
    lim, smap = splice_limit(seqs)
    for k in range(14):
        assert same_block(lim, seqs[smap.source(k)], k)
        assert smap.source(k) <= k


def test_splice_ignores_garbage_within_allowances():
    target = code("R", A)
    garbage = [build("full"), build("empty"), symdiff(target, build("periodic:1000"))]
    seqs = garbage + approximants(A, range(3, 9))
    lim, smap = splice_limit(seqs)
    for k in range(len(seqs), 17):
        assert smap.source(k) == len(seqs) - 1
        assert same_block(lim, target, k)


def test_untrusted_member_is_skipped():
    seqs = [build("empty"), build("empty"), build("full")]
    smap = SpliceMap(seqs)
    # d_k(C_1 △ C_2) = 1 > 2^-1·2 fails only for m = 1 with slack 1
    assert smap.source(5) == 2
    assert SpliceMap(seqs, Fraction(1)).source(5) == 1


def test_splice_map_is_deterministic():
    seqs = approximants(build("rand:6"), range(8))
    assert SpliceMap(seqs).table(15) == SpliceMap(seqs).table(15)


def test_convergence_report():
    seqs = approximants(A, range(9))
    lim, _ = splice_limit(seqs)
    grid = CheckpointGrid("dyadic", 1 << 18)
    rows = convergence_report(seqs, lim, grid)
    assert not any(r.flagged for r in rows)
    assert rows[-1].tail_max == 0
    inverted = convergence_report(seqs, complement(lim), grid)
    assert all(r.tail_max > Fraction(3, 4) for r in inverted)
    # the bound 2^(1-m)·2 is at least 1 for m <= 2, so only later rows can flag
    assert [r.flagged for r in inverted] == [False] * 3 + [True] * 6


def test_constant_convergence_all_zero():
    c = build("cr:2/3")
    lim, _ = splice_limit([c, c])
    assert all(r.tail_max == 0 for r in convergence_report([c, c], lim, GRID))


def test_factor2_transfer():
    seqs = approximants(A, range(9))
    lim, _ = splice_limit(seqs)
    assert factor2_transfer(seqs, lim, 14)
