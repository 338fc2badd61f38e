import math
from dataclasses import replace

import numpy as np
import pytest

from biflab import mandelbrot, moduli2, motion
from biflab.errors import SingularJacobian, StepCollapse
from biflab.moduli2 import ModuliPoint

BASILICA = ModuliPoint(2, -4)
Q3 = mandelbrot.center_poly(3).centers
AIRPLANE = ModuliPoint.from_quadratic(Q3[np.argmin(np.abs(Q3.imag))].real)
RABBIT = ModuliPoint.from_quadratic(Q3[np.argmax(Q3.imag)])
CORABBIT = ModuliPoint.from_quadratic(Q3[np.argmin(Q3.imag)])


@pytest.fixture(scope="module")
def basilica_disc():
    return motion.trace_disc(BASILICA, 1, 2, 0.0, 0.9, 64)


def in_disc_roots(lam):
    r = moduli2.pn(ModuliPoint(*lam), 1).roots
    return r[np.abs(r) < 1]


def test_zero_radius_is_the_center():
    d = motion.trace_disc(BASILICA, 1, 2, 0.0, 0.0, 64)
    assert len(d) == 1
    assert abs(d.point(0) - BASILICA) < 1e-10


def test_basilica_disc(basilica_disc):
    d = basilica_disc
    assert len(d) == 65
    assert d.residuals.max() < 1e-9
    assert abs(d.point(0) - BASILICA) < 1e-10
    for lam in d.lam:
        assert moduli2.pn(ModuliPoint(*lam), 2).scaled(0) < 1e-9


def test_basilica_omega_and_phi(basilica_disc):
    for t, lam in zip(basilica_disc.t, basilica_disc.lam):
        inside = in_disc_roots(lam)
        assert inside.size == 1
        assert abs(inside[0] - t) < 1e-8


def test_airplane_disc():
    d = motion.trace_disc(AIRPLANE, 1, 3, 0.0, 0.9, 64)
    assert d.residuals.max() < 1e-9
    for t, lam in zip(d.t, d.lam):
        inside = in_disc_roots(lam)
        assert inside.size == 1 and abs(inside[0] - t) < 1e-8


@pytest.mark.slow
def test_rabbit_discs_disjoint():
    a = motion.trace_disc(RABBIT, 1, 3, 0.0, 0.8, 32)
    b = motion.trace_disc(CORABBIT, 1, 3, 0.0, 0.8, 32)
    dist, (i, j, _) = motion.disjointness([a, b], 32)
    assert dist > 0.01 and {i, j} == {0, 1}


def test_basilica_airplane_disjoint():
    a = motion.trace_disc(BASILICA, 1, 2, 0.0, 0.8, 16)
    b = motion.trace_disc(AIRPLANE, 1, 3, 0.0, 0.8, 16)
    dist, _ = motion.disjointness([a, b], 16)
    assert dist > 0.1


def test_disjointness_rejects_bad_input(basilica_disc):
    with pytest.raises(ValueError):
        motion.disjointness([basilica_disc, basilica_disc])
    with pytest.raises(ValueError):
        motion.disjointness([basilica_disc])
    short = motion.trace_disc(AIRPLANE, 1, 3, 0.0, 0.9, 8)
    with pytest.raises(ValueError):
        motion.disjointness([basilica_disc, short])


def test_injectivity(basilica_disc):
    assert motion.injectivity_check(basilica_disc) > 0
    one = motion.trace_disc(BASILICA, 1, 2, 0.0, 0.0, 1)
    with pytest.raises(ValueError):
        motion.injectivity_check(one)
    t = basilica_disc.t.copy()
    t[5] = t[4]
    with pytest.raises(ValueError):
        motion.injectivity_check(replace(basilica_disc, t=t))


def test_ray_independence_of_tangent():
    tangents = [motion.center_tangent(BASILICA, 1, 2, a) for a in (0.0, 1.0, 2.5, -2.0)]
    for v in tangents[1:]:
        assert np.max(np.abs(v - tangents[0])) < 1e-5 * max(1, np.max(np.abs(tangents[0])))


def test_rays_share_the_center():
    for a in (0.0, math.pi / 3, 2.0):
        d = motion.trace_disc(BASILICA, 1, 2, a, 0.5, 8)
        assert abs(d.point(0) - BASILICA) < 1e-10
        assert d.residuals.max() < 1e-9


def test_preconditions():
    with pytest.raises(ValueError):
        motion.trace_disc(BASILICA, 2, 2)
    with pytest.raises(ValueError):
        motion.trace_disc(BASILICA, 1, 2, r_max=1.0)
    with pytest.raises(ValueError):
        motion.trace_disc(ModuliPoint.from_quadratic(0.1), 1, 2)


def test_collapse_near_the_parabolic_boundary():
    # t -> 1 along ray 0 makes the guiding fixed point parabolic
    with pytest.raises(StepCollapse) as e:
        motion.trace_disc(BASILICA, 1, 2, 0.0, 0.99, 32)
    assert 0.9 < e.value.details["s"] < 0.99


def test_transversality_breakdown_is_reported():
    c = mandelbrot.center_poly(4).centers
    c = c[np.argmin(np.abs(c + 1.3107))]
    with pytest.raises(SingularJacobian) as e:
        motion.trace_disc(ModuliPoint.from_quadratic(c), 1, 4, math.pi, 0.99, 32)
    assert e.value.details["cond"] > motion.MAX_COND


def test_disc_csv(tmp_path, basilica_disc):
    path = basilica_disc.to_csv(tmp_path / "disc.csv")
    lines = open(path).read().splitlines()
    assert lines[0].lstrip("#").strip().startswith("t_re")
    assert len(lines) == 1 + len(basilica_disc)
