from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
import pytest
from conftest import (
    brute_config,
    brute_max_free,
    load_extremal,
    naive_monomial_count,
    random_box_set,
)
from hypothesis import given, settings
from hypothesis import strategies as st

from diffsetlab.core import LabConstants, PointSet, PolynomialFamily
from diffsetlab.diffset import (
    MonomialCurveWindow,
    admissible_d_max,
    count_monomial_differences,
    density_bound_thm1,
    find_monomial_witness,
    greedy_free_set,
    has_polynomial_configuration,
    max_free_set_exact,
    randomness_defect,
)

SQ = PolynomialFamily.parse("d^2")


def test_window():
    S = MonomialCurveWindow(Fraction(1, 2), 9, 3)
    assert len(S) == 4
    assert S.points()[-1] == (4, 16, 64)


def test_configuration_examples():
    w = has_polynomial_configuration({1, 2}, SQ)
    assert w.d == 1 and w.verify(SQ)
    assert has_polynomial_configuration({5}, SQ) is None
    assert has_polynomial_configuration(set(), SQ) is None
    P = PolynomialFamily.parse("d, 2*d", strict=False)
    w = has_polynomial_configuration({1, 3, 6, 10}, P)
    assert w.d == 2 and w.verify(P)
    with pytest.raises(ValueError):
        has_polynomial_configuration({1, 2}, SQ, d_max=0)


def test_negative_d_is_found():
    # d=1 needs {2, 1} in A - A, d=-1 only needs {0, -1}
    P = PolynomialFamily.parse("d^2 + d, d^3")
    w = has_polynomial_configuration({1, 2}, P)
    assert w.d == -1 and w.verify(P)


@settings(max_examples=80, deadline=None)
@given(A=st.sets(st.integers(1, 14), min_size=1, max_size=8),
       fam=st.sampled_from(["d^2", "d, d^2", "d^3", "2*d^2 - d", "d^2 + d, d^3"]))
def test_configuration_matches_brute_force(A, fam):
    P = PolynomialFamily.parse(fam)
    got = has_polynomial_configuration(A, P, N=14)
    want = brute_config(A, P.evaluate, range(-14, 15))
    assert (got is not None) == want
    if got is not None:
        assert got.verify(P)


def test_admissible_d_max():
    assert admissible_d_max(SQ, 10) == 3
    assert admissible_d_max(SQ, 1) == 0
    assert admissible_d_max(PolynomialFamily.parse("d^2 - d"), 3) == 2  # (-1)^2+1 = 2 <= 2


def test_count_examples():
    assert count_monomial_differences(PointSet.full(2, 2), 1) == 3
    assert count_monomial_differences(PointSet.from_points([], 3, 2), 1) == 0
    assert count_monomial_differences(PointSet.from_points([(1, 1)], 2, 2), Fraction(1, 3)) == 0


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10**6), M=st.integers(1, 9), k=st.integers(2, 3),
       eps=st.sampled_from([Fraction(1), Fraction(1, 2), Fraction(1, 3)]))
def test_count_backends_agree_with_oracle(seed, M, k, eps):
    if k == 3:
        M = min(M, 5)
    B = random_box_set(np.random.default_rng(seed), M, k)
    D = min(math.floor(eps * M), M)
    want = naive_monomial_count(B, D)
    assert count_monomial_differences(B, eps, "direct") == want
    assert count_monomial_differences(B, eps, "fft") == want


def test_count_reflection_symmetry(rng):
    for _ in range(5):
        B = random_box_set(rng, 6, 2)
        sides = np.array(B.box.sides)
        R = PointSet(k=2, M=6, points=sides + 1 - B.points)
        assert count_monomial_differences(B) == count_monomial_differences(R)


def test_witness_search(rng):
    B = PointSet.from_points([(1, 2), (3, 6)], 4, 2)
    d, b, b2 = find_monomial_witness(B)
    assert d == 2 and tuple(x - y for x, y in zip(b, b2)) == (2, 4)
    assert find_monomial_witness(PointSet.from_points([(1, 1), (1, 2)], 4, 2)) is None


def test_randomness_defect():
    for M in (2, 4, 8):
        B = PointSet.full(M, 2)
        assert randomness_defect(B, LabConstants.for_set(B)).is_random
    B = PointSet.from_points([(1, 1)], 2, 2)
    r = randomness_defect(B, LabConstants.for_set(B))
    assert r.count == 0 and r.threshold > 0 and not r.is_random
    with pytest.raises(ValueError):
        E = PointSet.from_points([], 2, 2)
        randomness_defect(E, LabConstants(k=2, delta=Fraction(0)))


def test_randomness_defect_random_sets():
    from diffsetlab.planted import random_set

    hits = sum(randomness_defect(B, LabConstants.for_set(B)).is_random
               for B in (random_set(64, 2, 0.25, s) for s in range(100)))
    assert hits >= 99


def test_greedy_examples():
    assert greedy_free_set(3, SQ) == [1, 3]
    assert greedy_free_set(1, SQ) == [1]


@pytest.mark.parametrize("fam", ["d^2", "d, d^2", "d^3", "2*d^2 - d"])
def test_greedy_output_is_free(fam):
    P = PolynomialFamily.parse(fam)
    for N in range(1, 30):
        A = greedy_free_set(N, P)
        assert has_polynomial_configuration(A, P, N=N) is None


def test_exact_max_examples():
    assert max_free_set_exact(2, SQ).size == 1
    r = max_free_set_exact(3, SQ)
    assert r.size == 2 and r.witness == (1, 3) and r.exact
    assert max_free_set_exact(10, SQ).size == brute_max_free(10, {1, 4, 9}) == 4


def test_exact_max_against_fixture():
    table = load_extremal()
    for N in range(1, 31):
        assert max_free_set_exact(N, SQ).size == table[N]


def test_exact_max_general_families_against_brute():
    import itertools

    for fam in ("d, d^2", "d^2 + d, d^3"):
        P = PolynomialFamily.parse(fam)
        for N in range(1, 13):
            r = max_free_set_exact(N, P)
            best = 0
            for size in range(N, 0, -1):
                if any(has_polynomial_configuration(S, P, N=N) is None
                       for S in itertools.combinations(range(1, N + 1), size)):
                    best = size
                    break
            assert r.size == best and r.exact
            assert has_polynomial_configuration(r.witness, P, N=N) is None


def test_exact_max_monotone_steps():
    sizes = [max_free_set_exact(N, SQ).size for N in range(1, 41)]
    assert all(0 <= b - a <= 1 for a, b in zip(sizes, sizes[1:]))


def test_exact_max_budget_flag():
    r = max_free_set_exact(40, SQ, budget=5)
    assert not r.exact
    assert has_polynomial_configuration(r.witness, SQ, N=40) is None


def test_density_bound():
    N = math.ceil(math.e ** math.e)
    assert density_bound_thm1(N, SQ) == pytest.approx(1 / math.e, rel=2e-2)
    assert density_bound_thm1(10**6, SQ) > density_bound_thm1(10**9, SQ)
    P = PolynomialFamily.parse("d^3, d^2")
    x = math.log(10**6)
    assert density_bound_thm1(10**6, P) == pytest.approx((math.log(x) / x) ** 0.25)
    with pytest.raises(ValueError):
        density_bound_thm1(15, SQ)
