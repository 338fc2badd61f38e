"""Guided holomorphic discs through centers, traced by continuation.

A disc with guide period n and carrier period m solves
p_n(lam(t), t) = 0 and p_m(lam(t), 0) = 0 for t on a ray of the unit disc.
The tracer is a tangent predictor with a Newton corrector; the Jacobian in
lam is taken by central differences of the multiplier polynomials.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import moduli2
from .errors import LeftGuideRegion, SingularJacobian, StepCollapse
from .moduli2 import ModuliPoint
from .tables import write_csv

FD_STEP = 1e-7
RESIDUAL_TOL = 1e-9
MAX_HALVINGS = 20
MAX_COND = 1e10


@dataclass(frozen=True)
class GuidedDisc:
    n: int
    m: int
    center: ModuliPoint
    ray_angle: float
    t: np.ndarray  # complex, one per sample
    lam: np.ndarray  # shape (k, 2)
    residuals: np.ndarray  # shape (k, 2): scaled |p_n(lam, t)|, |p_m(lam, 0)|
    halvings: int = 0

    def __len__(self) -> int:
        return self.t.size

    def point(self, i: int) -> ModuliPoint:
        return ModuliPoint(*self.lam[i])

    def to_csv(self, path) -> str:
        rows = [
            (t.real, t.imag, l[0].real, l[0].imag, l[1].real, l[1].imag, r[0], r[1])
            for t, l, r in zip(self.t, self.lam, self.residuals)
        ]
        return write_csv(path, ["t_re", "t_im", "l1_re", "l1_im", "l2_re", "l2_im", "res_n", "res_m"], rows)


class _System:
    """F(lam; t) = (p_n(lam, t), p_m(lam, 0)) with a difference Jacobian."""

    def __init__(self, n: int, m: int):
        self.n, self.m = n, m

    def polys(self, lam):
        p = ModuliPoint(*lam)
        return moduli2.pn(p, self.n), moduli2.pn(p, self.m)

    def value(self, lam, t):
        pn, pm = self.polys(lam)
        return np.array([pn(t), pm(0)]), (pn.scaled(t), pm.scaled(0)), pn

    def jacobian(self, lam, t):
        J = np.empty((2, 2), complex)
        for i in range(2):
            h = FD_STEP * max(1.0, abs(lam[i]))
            e = np.zeros(2, complex)
            e[i] = h
            fp = self.value(lam + e, t)[0]
            fm = self.value(lam - e, t)[0]
            J[:, i] = (fp - fm) / (2 * h)
        cond = np.linalg.cond(J)
        if not cond <= MAX_COND:
            raise SingularJacobian(f"Jacobian condition number {cond:.3g}", cond=cond, lam=lam, t=t)
        return J

    def correct(self, lam, t, J, maxit: int = 8):
        """Newton from lam at fixed t; returns (lam, scaled residuals) or None."""
        F, res, _ = self.value(lam, t)
        for it in range(maxit):
            if max(res) < 1e-13:
                break
            step = np.linalg.solve(J, F)
            lam = lam - step
            F, res, _ = self.value(lam, t)
            if np.linalg.norm(step) <= 1e-15 * (1 + np.linalg.norm(lam)):
                break
            if it == 2:
                J = self.jacobian(lam, t)
        if not max(res) < RESIDUAL_TOL / 10:
            return None
        return lam, res

    def tangent(self, lam, t, J=None):
        """dlam/dt from J dlam = -dF/dt."""
        J = self.jacobian(lam, t) if J is None else J
        pn = self.polys(lam)[0]
        return np.linalg.solve(J, -np.array([pn.poly.deriv()(t), 0])), J


def _check_guide(sys: _System, lam, t):
    pn = sys.polys(lam)[0]
    k = pn.count_in_disc()
    if k != 1:
        raise LeftGuideRegion(f"p_{sys.n} has {k} roots in the unit disc at t={t:.6g}", count=k, t=t, lam=lam)


def trace_disc(center: ModuliPoint, n: int, m: int, ray_angle: float = 0.0, r_max: float = 0.9, steps: int = 64) -> GuidedDisc:
    """Continue lam(t) with t = s e^{i ray_angle}, s = 0 .. r_max in ``steps`` increments."""
    if n == m:
        raise ValueError("guide and carrier periods must differ")
    if not 0 <= r_max < 1:
        raise ValueError("r_max must lie in [0, 1)")
    sys = _System(n, m)
    lam = center.as_array()
    _, res, _ = sys.value(lam, 0j)
    if max(res) > RESIDUAL_TOL:
        raise ValueError(f"center is not on Per_{n}(0) and Per_{m}(0) (residuals {res[0]:.3g}, {res[1]:.3g})")
    J = sys.jacobian(lam, 0j)
    got = sys.correct(lam, 0j, J)
    if got is not None:
        lam, res = got
    _check_guide(sys, lam, 0j)
    u = complex(math.cos(ray_angle), math.sin(ray_angle))
    ts, lams, resid = [0j], [lam.copy()], [res]
    halvings = 0
    s = 0.0
    targets = [r_max * k / steps for k in range(1, steps + 1)] if r_max > 0 and steps > 0 else []
    fresh = True  # J was computed at the current lam
    for target in targets:
        ds = target - s
        depth = 0
        while s < target - 1e-15:
            ds = min(ds, target - s)
            t0, t1 = s * u, (s + ds) * u
            # the Jacobian drifts slowly along the path and is reused until a
            # corrector fails
            dl, J = sys.tangent(lam, t0, J)
            got = sys.correct(lam + dl * (t1 - t0), t1, J)
            if got is None:
                if not fresh:
                    J, fresh = sys.jacobian(lam, t0), True
                    continue
                depth += 1
                halvings += 1
                if depth > MAX_HALVINGS:
                    raise StepCollapse(f"corrector failed after {MAX_HALVINGS} halvings at s={s:.6g}", s=s, lam=lam)
                ds /= 2
                continue
            lam, res = got
            s += ds
            fresh = False
        _check_guide(sys, lam, target * u)
        ts.append(target * u)
        lams.append(lam.copy())
        resid.append(res)
    return GuidedDisc(n, m, ModuliPoint(*lams[0]), ray_angle, np.array(ts), np.array(lams), np.array(resid), halvings)


def center_tangent(center: ModuliPoint, n: int, m: int, ray_angle: float, r: float = 1e-4) -> np.ndarray:
    """dlam/dt at t=0 by a central difference over the opposite rays at radius r."""
    a = trace_disc(center, n, m, ray_angle, r, 1)
    b = trace_disc(center, n, m, ray_angle + math.pi, r, 1)
    u = complex(math.cos(ray_angle), math.sin(ray_angle))
    return (a.lam[-1] - b.lam[-1]) / (2 * r * u)


def disjointness(discs, t_samples: int = 32):
    """Smallest |lam_i(t) - lam_j(t)| over disc pairs and common t samples.

    Returns (distance, (i, j, t)).
    """
    discs = list(discs)
    if len(discs) < 2:
        raise ValueError("need at least two discs")
    for i in range(len(discs)):
        for j in range(i):
            if discs[i] is discs[j]:
                raise ValueError("a disc was passed twice")
    t = discs[0].t
    for d in discs[1:]:
        if d.n != discs[0].n:
            raise ValueError("discs must share the guide period")
        if d.t.shape != t.shape or np.max(np.abs(d.t - t)) > 1e-12:
            raise ValueError("discs must be sampled at the same t values")
    idx = np.unique(np.round(np.linspace(0, t.size - 1, t_samples)).astype(int))
    best = (math.inf, None)
    for i in range(len(discs)):
        for j in range(i + 1, len(discs)):
            dist = np.linalg.norm(discs[i].lam[idx] - discs[j].lam[idx], axis=1)
            k = int(np.argmin(dist))
            if dist[k] < best[0]:
                best = (float(dist[k]), (i, j, complex(t[idx[k]])))
    return best


def injectivity_check(disc: GuidedDisc) -> float:
    """Minimum distance between lam(t_i), lam(t_j) for distinct samples."""
    if len(disc) < 8:
        raise ValueError("need at least 8 samples")
    dt = np.abs(disc.t[:, None] - disc.t[None, :])
    np.fill_diagonal(dt, np.inf)
    if dt.min() == 0:
        raise ValueError("duplicate t samples")
    d = np.linalg.norm(disc.lam[:, None, :] - disc.lam[None, :, :], axis=2)
    np.fill_diagonal(d, np.inf)
    return float(d.min())
