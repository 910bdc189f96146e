from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ctype_fhc.errors import PreconditionError
from ctype_fhc.sets import build_family, members, prefix_density, verify_family


def test_single_pair():
    fam = build_family([(1, 1)], 10 ** 4)
    a = members(fam, 1, 10 ** 4)
    assert a and a[0] >= 1
    assert fam.d[0] >= 2
    assert verify_family(fam)["separated"]


def test_two_equal_pairs_cross_distance():
    H = 20000
    fam = build_family([(2, 0), (2, 0)], H)
    a, b = fam.members(1), fam.members(2)
    assert a and b
    assert min(abs(x - y) for x in a for y in b) >= 4
    rep = verify_family(fam)
    assert rep["disjoint"] and rep["separated"]


def test_interval_structure():
    fam = build_family([(3, 5), (7, 2), (16, 16)], 10 ** 6)
    for i, c in enumerate(fam.starts[:-1], start=1):
        assert fam.starts[i] == 2 * c + fam.gap(i + 1)
        j = fam.owner(i)
        if j:
            assert (i // 2 ** (j - 1)) % 2 == 1
    for j in range(1, 4):
        m = fam.members(j)
        assert m[0] >= fam.pairs[j - 1][1]
        # inside one interval consecutive members differ by d_j
        for x, y in zip(m, m[1:]):
            i = max(q for q, c in enumerate(fam.starts, start=1) if c <= x)
            if y < 2 * fam.starts[i - 1]:
                assert y - x == fam.d[j - 1]


def test_first_interval_of_each_set():
    fam = build_family([(3, 5), (7, 2), (16, 16)], 10 ** 6)
    for j in range(1, 4):
        first = fam.interval_start(2 ** (j - 1))
        assert fam.members(j)[0] == first
        assert fam.burn_in(j) == 2 * first


def test_certified_density_holds_past_burn_in():
    H = 3 * 10 ** 5
    fam = build_family([(1, 0), (4, 9), (5, 5)], H)
    for j in range(1, 4):
        start = fam.burn_in(j)
        if start > H:
            continue
        low, _ = prefix_density(fam.members(j), H).min_density(start)
        assert low >= fam.certified_density(j)


def test_preconditions():
    with pytest.raises(PreconditionError):
        build_family([(0, 1)], 100)
    with pytest.raises(PreconditionError):
        build_family([(16, 16)], 10)
    fam = build_family([(1, 1)], 1000)
    with pytest.raises(PreconditionError):
        fam.members(2)


def test_density_curve_evens():
    curve = prefix_density(range(0, 20, 2), 20)
    rows = list(curve.rows())
    assert rows[1] == (2, 1, Fraction(1, 2))
    assert curve.min_density(1, 20) == (Fraction(1, 2), 2)
    assert prefix_density([], 5).count(5) == 0


@settings(max_examples=50, deadline=None)
@given(st.sets(st.integers(0, 300), max_size=60), st.integers(1, 300), st.integers(1, 300))
def test_min_density_matches_full_scan(points, a, b):
    lo, hi = min(a, b), max(a, b)
    curve = prefix_density(points, 300)
    brute = min(Fraction(sum(1 for p in points if p < N), N) for N in range(lo, hi + 1))
    assert curve.min_density(lo, hi)[0] == brute
    counts = curve.counts()
    for N in range(0, 301, 37):
        assert counts[N] == curve.count(N)


@settings(max_examples=15, deadline=None)
@given(st.lists(st.tuples(st.integers(1, 12), st.integers(0, 12)), min_size=1, max_size=3))
def test_random_families_verify(pairs):
    fam = build_family(pairs, 30000)
    rep = verify_family(fam)
    assert rep["disjoint"] and rep["separated"] and rep["floor"]
