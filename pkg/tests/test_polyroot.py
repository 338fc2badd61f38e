import numpy as np
import pytest
from hypothesis import given, settings
from scipy.spatial import cKDTree
from hypothesis import strategies as st

from biflab.errors import DegenerateInput, Overflow
from biflab.polyroot import CPoly, compose_iterate, product_evaluator, aberth, roots, roots_flat

cnum = st.complex_numbers(max_magnitude=2, allow_nan=False, allow_infinity=False)


def as_dict(rs):
    return sorted((round(r.real, 8), round(r.imag, 8), k) for r, k in rs)


def test_factored_cubic():
    # w^3 - 2 w^2 = w^2 (w - 2)
    rs = roots(CPoly([0, 0, -2, 1]))
    assert sum(k for _, k in rs) == 3
    got = {k: r for r, k in rs}
    assert abs(got[2]) < 1e-12 and abs(got[1] - 2) < 1e-12


def test_center_cubic():
    z = roots_flat(CPoly([1, 1, 2, 1]))
    z = z[np.argsort(z.imag)]
    assert abs(z[1] - (-1.754877666246693)) < 1e-12
    assert abs(z[2] - (-0.1225611668766536 + 0.7448617666197442j)) < 1e-12
    assert abs(z[0] - np.conj(z[2])) < 1e-12


def test_constant_is_degenerate():
    with pytest.raises(DegenerateInput):
        roots(CPoly([5]))


def test_multiple_root_detected():
    p = CPoly.from_roots([1.5, 1.5, 1.5, -0.3j, 2])
    rs = roots(p)
    k = {round(r.real, 5) + 1j * round(r.imag, 5): m for r, m in rs}
    assert k[1.5] == 3
    assert sum(k.values()) == 5


@settings(max_examples=60, deadline=None)
@given(st.lists(cnum, min_size=1, max_size=12), cnum)
def test_horner_matches_power_sum(coeffs, z):
    if abs(coeffs[-1]) == 0:
        coeffs[-1] = 1
    p = CPoly(coeffs)
    naive = sum(c * z**i for i, c in enumerate(coeffs))
    scale = sum(abs(c) * abs(z) ** i for i, c in enumerate(coeffs))
    assert abs(p(z) - naive) <= 1e-12 * max(scale, 1e-300)


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 16), st.integers(0, 2**31 - 1))
def test_recovers_separated_roots(deg, seed):
    # expanded coefficients: keep the degree modest, high degree goes through product form below
    rng = np.random.default_rng(seed)
    a = []
    while len(a) < deg:
        c = complex(*rng.uniform(-1, 1, 2))
        if all(abs(c - b) > 0.2 for b in a):
            a.append(c)
    z = roots_flat(CPoly.from_roots(a))
    assert z.size == deg
    for r in a:
        assert np.min(np.abs(z - r)) < 1e-9


@settings(max_examples=30, deadline=None)
@given(st.lists(cnum, min_size=3, max_size=10))
def test_conjugation_consistency(coeffs):
    coeffs[-1] = 1 + abs(coeffs[-1])
    p = CPoly(coeffs)
    z = roots_flat(p)
    zc = roots_flat(p.conj())
    # match each conjugated root to a root of the conjugate polynomial
    for r in np.conj(z):
        assert np.min(np.abs(zc - r)) < 1e-6 * (1 + abs(r))
    assert z.size == p.degree


def test_multiplicities_sum_to_degree():
    rng = np.random.default_rng(1)
    for _ in range(20):
        p = CPoly(rng.normal(size=9) + 1j * rng.normal(size=9))
        assert sum(k for _, k in roots(p)) == p.degree


@pytest.mark.slow
def test_high_degree_product_form():
    rng = np.random.default_rng(7)
    n = 4096
    a = np.exp(2j * np.pi * (np.arange(n) + rng.uniform(-0.2, 0.2, n)) / n) * rng.uniform(0.9, 1.1, n)
    z = aberth(product_evaluator(a), np.exp(2j * np.pi * (np.arange(n) + 0.5) / n), tol=1e-13, maxiter=200)
    d, _ = cKDTree(np.column_stack((z.real, z.imag))).query(np.column_stack((a.real, a.imag)))
    assert d.max() < 1e-9


def test_compose_iterate_examples():
    num, den = compose_iterate(CPoly([0, 0, 1]), CPoly([1]), 3)
    assert np.allclose(num.coeffs / den.coeffs[0], [0] * 8 + [1])
    num, den = compose_iterate(CPoly([-1, 0, 1]), CPoly([1]), 2)
    assert np.allclose(num.coeffs / den.coeffs[0], [0, 0, -2, 0, 1])


def test_compose_iterate_overflow():
    with pytest.raises(Overflow):
        compose_iterate(CPoly([0.3, 0, 1]), CPoly([1]), 20)
