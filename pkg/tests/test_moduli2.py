import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from biflab import mandelbrot, moduli2, ratmap
from biflab.errors import AmbiguousPeriod, CountMismatch, DegenerateModuli, NotInComponent
from biflab.moduli2 import AffineLine, ModuliPoint, coords, normal_form, pn
from biflab.ratmap import RationalMap

AIRPLANE = -1.7548776662466927


def random_quadratic(rng):
    while True:
        try:
            return RationalMap(rng.normal(size=3) + 1j * rng.normal(size=3), rng.normal(size=3) + 1j * rng.normal(size=3))
        except Exception:
            continue


def sorted_mod(w):
    w = np.asarray(w, dtype=complex)
    return w[np.lexsort((w.imag, w.real, np.round(np.abs(w), 9)))]


def test_moduli_point_basics():
    lam = ModuliPoint(2, -4)
    assert lam.sigma3 == lam.sigma1 - 2
    assert ModuliPoint.from_quadratic(-1) == lam
    assert (ModuliPoint(1, 1) - ModuliPoint(4, 5)) == pytest.approx(5.0)


def test_normal_form_z2():
    f = normal_form(ModuliPoint(2, 0))
    w = sorted(abs(p.multiplier) for p in ratmap.periodic_points(f, 1) for _ in range(p.multiplicity))
    assert np.allclose(w, [0, 0, 2], atol=1e-12)


def test_normal_form_basilica():
    w = moduli2.fixed_multipliers(ModuliPoint(2, -4))
    want = np.array([0, 1 + 5**0.5, 1 - 5**0.5])
    assert np.allclose(sorted_mod(w), sorted_mod(want), atol=1e-12)


def test_triple_parabolic_is_degenerate():
    # all three multipliers equal to 1: sigma1 = 3, sigma2 = 3
    with pytest.raises(DegenerateModuli):
        normal_form(ModuliPoint(3, 3))


def test_coords_examples():
    assert abs(coords(RationalMap.power(2)) - ModuliPoint(2, 0)) < 1e-12
    assert abs(coords(RationalMap.quadratic(-1)) - ModuliPoint(2, -4)) < 1e-12


def test_coords_z_plus_inverse():
    # z + 1/z has a triple parabolic fixed point at infinity: lambda = (3, 3), no normal form
    f = RationalMap([1, 0, 1], [0, 1])
    lam = coords(f)
    assert abs(lam - ModuliPoint(3, 3)) < 1e-12
    with pytest.raises(DegenerateModuli):
        normal_form(lam)


@settings(max_examples=40, deadline=None)
@given(st.complex_numbers(max_magnitude=5, allow_nan=False), st.complex_numbers(max_magnitude=5, allow_nan=False))
def test_round_trip(l1, l2):
    lam = ModuliPoint(l1, l2)
    try:
        f = normal_form(lam)
        back = coords(f)
    except (DegenerateModuli, AmbiguousPeriod):
        return
    assert abs(back - lam) < 1e-9 * (1 + abs(l1) + abs(l2))


def test_index_relation_random_maps():
    rng = np.random.default_rng(11)
    for _ in range(30):
        assert coords(random_quadratic(rng)).residual < 1e-10


def test_pn_examples():
    assert np.allclose(pn(ModuliPoint(2, 0), 1).poly.coeffs, [0, 0, -2, 1], atol=1e-12)
    p2 = pn(ModuliPoint(2, 0), 2)
    assert p2.degree == 1 and np.allclose(p2.poly.coeffs, [-4, 1], atol=1e-10)
    b2 = pn(ModuliPoint(2, -4), 2)
    assert b2.degree == 1 and abs(b2.roots[0]) < 1e-12


def test_pn_degrees_and_roots_match_cycles():
    rng = np.random.default_rng(3)
    f = random_quadratic(rng)
    lam = coords(f)
    for n, deg in ((1, 3), (2, 1), (3, 2), (4, 3)):
        p = pn(lam, n)
        assert p.degree == deg
        if n > 1:
            w = ratmap.exact_cycles(f, n).multipliers
            for r in p.roots:
                assert np.min(np.abs(w - r)) < 1e-8 * max(1, abs(r))


def test_per1_line_examples():
    assert np.allclose(moduli2.per1_line(0), (1, 0, -2))
    assert np.allclose(moduli2.per1_line(1), (2, -1, -3))


def test_per1_membership_random_maps():
    rng = np.random.default_rng(12)
    for _ in range(30):
        f = random_quadratic(rng)
        lam = coords(f)
        for p in ratmap.periodic_points(f, 1):
            a, b, c = moduli2.per1_line(p.multiplier)
            assert abs(a * lam.l1 + b * lam.l2 + c) < 1e-8


def test_count_table():
    t = moduli2.count_table(10)
    assert [t[n] for n in range(1, 11)] == [1, 1, 3, 6, 15, 27, 63, 120, 252, 495]
    assert list(t.nu2[1:5]) == [2, 2, 6, 12]
    for n in range(1, 11):
        assert sum(t.nu2[k] for k in ratmap.divisors(n)) == 2**n


def test_multiplier_pair_examples():
    wn, wm = moduli2.multiplier_pair(ModuliPoint(2, -4), 1, 2)
    assert abs(wn) < 1e-12 and abs(wm) < 1e-10
    with pytest.raises(NotInComponent) as e:
        moduli2.multiplier_pair(ModuliPoint(2, 0), 1, 2)
    assert e.value.details["counts"] == (2, 0)
    wn, wm = moduli2.multiplier_pair(ModuliPoint.from_quadratic(AIRPLANE), 1, 3)
    assert abs(wn) < 1e-12 and abs(wm) < 1e-8


def test_multiplier_pair_injective_on_basilica_component():
    # c = -1 + r e^{it}/4 fills the period-2 component |4(c+1)| < 1
    rng = np.random.default_rng(8)
    c = -1 + 0.25 * np.sqrt(rng.uniform(0, 0.8, 50)) * np.exp(2j * np.pi * rng.uniform(size=50))
    img = np.array([moduli2.multiplier_pair(ModuliPoint.from_quadratic(x), 1, 2) for x in c])
    d = np.linalg.norm(img[:, None, :] - img[None, :, :], axis=2)
    np.fill_diagonal(d, np.inf)
    assert d.min() > 0


def test_per_curve_examples():
    (pt,) = moduli2.per_curve_samples(2, 0, 0)
    assert abs(pt - ModuliPoint(2, -4)) < 1e-10
    pts = moduli2.per_curve_samples(3, 0, 0)
    want = [ModuliPoint.from_quadratic(c) for c in mandelbrot.center_poly(3).centers]
    assert len(pts) == 3
    for p in pts:
        assert min(abs(p - q) for q in want) < 1e-9
    assert len(moduli2.per_curve_samples(4, 0.2, 0.1)) == 6


def test_per_curve_points_lie_on_both_curves():
    for p in moduli2.per_curve_samples(3, 0.3 - 0.2j, 0.4j):
        a, b, c = moduli2.per1_line(0.4j)
        assert abs(a * p.l1 + b * p.l2 + c) < 1e-9
        assert pn(p, 3).scaled(0.3 - 0.2j) < 1e-8


def test_per_curve_rejects_outside_disc():
    with pytest.raises(ValueError):
        moduli2.per_curve_samples(2, 1.5, 0)


def test_per_curve_reports_failed_points():
    # eta near -1 pushes intersections out to |s| ~ 200 where the normal form
    # degenerates; bad points must be reported rather than returned
    with pytest.raises(CountMismatch):
        moduli2.per_curve_samples(5, 0.8j, -0.85)


def test_affine_lines():
    line = AffineLine.polynomial()
    assert line.is_polynomial
    assert line(-1) == ModuliPoint(2, -4)
    for eta in (0, 0.5, 0.3 - 0.4j):
        ln = AffineLine.per1(eta)
        a, b, c = moduli2.per1_line(eta)
        for s in (0, 1.5j, -2 + 1j):
            p = ln(s)
            assert abs(a * p.l1 + b * p.l2 + c) < 1e-12
    pts = line.points(np.array([0, -1]))
    assert pts.shape == (2, 2) and np.allclose(pts[1], [2, -4])
