"""Rational maps of the Riemann sphere.

A map is stored through its homogeneous lift F = (P, Q), two coefficient
arrays of length d+1 with ``P(x, y) = sum_i a_i x**i y**(d-i)``.  Points of
the sphere are complex numbers, with ``INF`` standing for the point at
infinity.

Periodic points of f^n are computed in a unitarily rotated chart in which
infinity is not periodic, so that all d^n + 1 of them are finite roots of
``X_n(z, 1) - z Y_n(z, 1)``.  That polynomial is never expanded: it is
evaluated by iterating the lift with per-step rescaling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.spatial import cKDTree

from . import polyroot
from .errors import (
    AmbiguousPeriod,
    DegenerateInput,
    IndeterminatePoint,
    NonConvergence,
    PeriodTooLarge,
    RootFindingFailed,
    SingularMatrix,
)
from .polyroot import CPoly

INF = complex(np.inf, 0.0)

# chordal distance below which two points of the sphere are the same point
SAME_POINT = 1e-8

# pointwise evaluation keeps the fixed-point equation accurate far beyond the
# symbolic cap; the limit is set by root-finding cost
MAX_POINTWISE_DEGREE = 1 << 16

# above this many roots, Aberth sweeps (quadratic cost) are replaced by
# backward-orbit seeding with Newton refinement
TREE_THRESHOLD = 600


def is_inf(z) -> bool:
    return bool(np.isinf(z.real) or np.isinf(z.imag))


def chordal(a, b):
    """Chordal distance on the unit sphere (diameter 2)."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    ia, ib = np.isinf(a), np.isinf(b)
    with np.errstate(invalid="ignore", over="ignore"):
        d = 2 * np.abs(a - b) / np.sqrt((1 + np.abs(a) ** 2) * (1 + np.abs(b) ** 2))
        d = np.where(ia & ~ib, 2 / np.sqrt(1 + np.abs(b) ** 2), d)
        d = np.where(ib & ~ia, 2 / np.sqrt(1 + np.abs(a) ** 2), d)
        d = np.where(ia & ib, 0.0, d)
    return d if d.ndim else float(d)


def mobius_mu(n: int) -> np.ndarray:
    """mu(k) for k = 0..n (mu(0) unused)."""
    mu = np.ones(n + 1, dtype=int)
    mu[0] = 0
    is_p = np.ones(n + 1, dtype=bool)
    for p in range(2, n + 1):
        if is_p[p]:
            is_p[2 * p :: p] = False
            mu[p::p] *= -1
            mu[p * p :: p * p] = 0
    return mu


def divisors(n: int) -> list[int]:
    return [k for k in range(1, n + 1) if n % k == 0]


def nu(d: int, n: int) -> int:
    """Number of points of exact period n of a generic degree-d map."""
    mu = mobius_mu(n)
    return int(sum(mu[n // k] * (d**k + 1) for k in divisors(n)))


def _homog(coeffs, x, y, d):
    """P(x, y), dP/dx, dP/dy for P(x, y) = sum c_i x^i y^(d-i)."""
    # Horner in x with y-powers folded in: v_k = sum_{i>=k} c_i x^(i-k) y^(d-i)
    c = np.asarray(coeffs, dtype=complex)
    v = np.full_like(x, c[d])
    vx = np.zeros_like(x)
    vy = np.zeros_like(x)
    for i in range(d - 1, -1, -1):
        # v_i = x v_{i+1} + c_i y^(d-i); v_{i+1} is homogeneous of degree d-i-1 in (x, y)
        vx = vx * x + v
        vy = vy * x
        if c[i] != 0:
            yp = y ** (d - i - 1)
            vy = vy + c[i] * (d - i) * yp
            v = v * x + c[i] * (yp * y)
        else:
            v = v * x
    return v, vx, vy


def _sylvester_resultant(a, b, d) -> complex:
    """Resultant of the binary forms with coefficient arrays a, b (degree d)."""
    m = np.zeros((2 * d, 2 * d), dtype=complex)
    for r in range(d):
        m[r, r : r + d + 1] = a[::-1]
        m[d + r, r : r + d + 1] = b[::-1]
    return complex(np.linalg.det(m))


class RationalMap:
    """Degree-d rational map ``num(z)/den(z)``; immutable."""

    def __init__(self, num, den=1, *, check: bool = True):
        num = num if isinstance(num, CPoly) else CPoly(num)
        den = den if isinstance(den, CPoly) else CPoly(den)
        if den.is_zero():
            raise DegenerateInput("denominator is identically zero")
        if not (np.all(np.isfinite(num.coeffs)) and np.all(np.isfinite(den.coeffs))):
            raise DegenerateInput("non-finite coefficient")
        d = max(num.degree, den.degree)
        if d < 2:
            raise DegenerateInput("rational maps of degree < 2 are not supported")
        a = np.zeros(d + 1, complex)
        b = np.zeros(d + 1, complex)
        a[: num.coeffs.size] = num.coeffs
        b[: den.coeffs.size] = den.coeffs
        norm = float(max(np.max(np.abs(a)), np.max(np.abs(b))))
        self.d = d
        self.num, self.den = num, den
        self._a, self._b = a, b
        self.lift_scale = norm
        self.resultant = _sylvester_resultant(a / norm, b / norm, d)
        if check and not abs(self.resultant) > 1e-12:
            raise DegenerateInput(
                f"numerator and denominator share a root (|Res| = {abs(self.resultant):.3g})"
            )
        self._cache: dict = {}

    # -- constructors -------------------------------------------------------

    @classmethod
    def polynomial(cls, coeffs) -> "RationalMap":
        return cls(CPoly(coeffs), CPoly([1]))

    @classmethod
    def quadratic(cls, c: complex) -> "RationalMap":
        """z**2 + c."""
        return cls.polynomial([c, 0, 1])

    @classmethod
    def power(cls, d: int) -> "RationalMap":
        return cls.polynomial([0] * d + [1])

    @classmethod
    def from_lift(cls, a, b) -> "RationalMap":
        return cls(CPoly(a), CPoly(b))

    # -- homogeneous lift ---------------------------------------------------

    def lift(self, normalized: bool = True):
        """Coefficient arrays (a, b) of the lift; unit max-norm by default."""
        if normalized:
            return self._a / self.lift_scale, self._b / self.lift_scale
        return self._a.copy(), self._b.copy()

    def F(self, x, y, normalized: bool = True):
        a, b = self.lift(normalized)
        return _homog(a, x, y, self.d)[0], _homog(b, x, y, self.d)[0]

    # -- evaluation -----------------------------------------------------------

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        out = np.empty(z.shape, complex)
        zf = z.ravel()
        o = out.ravel()
        inf = np.isinf(zf)
        if inf.any():
            o[inf] = INF if self._b[-1] == 0 else self._a[-1] / self._b[-1]
        fin = ~inf
        x, y = self._xy(zf[fin])
        P = _homog(self._a, x, y, self.d)[0]
        Q = _homog(self._b, x, y, self.d)[0]
        with np.errstate(divide="ignore", invalid="ignore"):
            o[fin] = np.where(Q == 0, INF, P / Q)
        return out if out.ndim else complex(out)

    @staticmethod
    def _xy(z):
        big = np.abs(z) > 1
        with np.errstate(divide="ignore", invalid="ignore"):
            x = np.where(big, 1.0 + 0j, z)
            y = np.where(big, 1.0 / z, 1.0 + 0j)
        return x, y

    def derivative(self, z):
        """f'(z) in the standard chart (finite z with finite image)."""
        z = np.asarray(z, dtype=complex)
        one = np.ones_like(z)
        P, Px, _ = _homog(self._a, z, one, self.d)
        Q, Qx, _ = _homog(self._b, z, one, self.d)
        with np.errstate(divide="ignore", invalid="ignore"):
            return (Px * Q - P * Qx) / (Q * Q)

    def spherical_derivative(self, z):
        """|f'(z)| (1+|z|^2) / (1+|f(z)|^2), valid at every finite z.

        Written homogeneously: |P_x Q - P Q_x| (|x|^2+|y|^2) / (|P|^2+|Q|^2)
        on a representative with y = 1 (derivative of the chart map), which
        also covers poles of f.
        """
        z = np.asarray(z, dtype=complex)
        one = np.ones_like(z)
        P, Px, _ = _homog(self._a, z, one, self.d)
        Q, Qx, _ = _homog(self._b, z, one, self.d)
        return np.abs(Px * Q - P * Qx) * (1 + np.abs(z) ** 2) / (np.abs(P) ** 2 + np.abs(Q) ** 2)

    def critical_points(self) -> np.ndarray:
        """The 2d-2 critical points (INF included when critical)."""
        a, b, d = self._a, self._b, self.d
        # Wronskian P_x Q - P Q_x is a form of degree 2d-2 in (x, y)
        Pz = CPoly(a).deriv()
        Qz = CPoly(b).deriv()
        w = Pz * CPoly(b) - CPoly(a) * Qz
        pts = list(polyroot.roots_flat(w)) if w.degree >= 1 else []
        pts += [INF] * (2 * d - 2 - w.degree)
        return np.array(pts, dtype=complex)

    def __repr__(self):
        return f"RationalMap(d={self.d}, num={self.num.coeffs}, den={self.den.coeffs})"

    # -- charts -----------------------------------------------------------------

    def _conjugate_lift(self, m) -> tuple[np.ndarray, np.ndarray]:
        """Lift of M o f o M^-1 for a 2x2 matrix M (no normalization)."""
        m = np.asarray(m, dtype=complex)
        inv = np.linalg.inv(m)
        d = self.d
        # components of M^-1 (z, 1) as linear polys in z
        l1 = CPoly([inv[0, 1], inv[0, 0]])
        l2 = CPoly([inv[1, 1], inv[1, 0]])
        p1 = [l1**i for i in range(d + 1)]
        p2 = [l2**i for i in range(d + 1)]

        def form(c):
            out = np.zeros(d + 1, complex)
            for i, ci in enumerate(c):
                if ci == 0:
                    continue
                t = (p1[i] * p2[d - i]).coeffs
                out[: t.size] += ci * t
            return out

        P, Q = form(self._a), form(self._b)
        return m[0, 0] * P + m[0, 1] * Q, m[1, 0] * P + m[1, 1] * Q

    def conjugate(self, m) -> "RationalMap":
        m = np.asarray(m, dtype=complex)
        if m.shape != (2, 2):
            raise DegenerateInput("expected a 2x2 matrix")
        if not abs(np.linalg.det(m)) > 1e-12:
            raise SingularMatrix(f"|det| = {abs(np.linalg.det(m)):.3g}")
        a, b = self._conjugate_lift(m)
        return RationalMap(CPoly(a), CPoly(b))


def conjugate(f: RationalMap, mobius) -> RationalMap:
    """M o f o M^-1 where M acts on the sphere as z -> (a z + b)/(c z + d)."""
    return f.conjugate(mobius)


def mobius_apply(m, z):
    m = np.asarray(m, dtype=complex)
    z = np.asarray(z, dtype=complex)
    inf = np.isinf(z)
    with np.errstate(divide="ignore", invalid="ignore"):
        num = m[0, 0] * z + m[0, 1]
        den = m[1, 0] * z + m[1, 1]
        # a pole within rounding of the denominator is the point at infinity
        w = np.where(np.abs(den) <= 1e-14 * np.abs(num), INF, num / den)
        w = np.where(inf, INF if m[1, 0] == 0 else m[0, 0] / m[1, 0], w)
    return w if w.ndim else complex(w)


def _rotation(alpha: float, beta: float) -> np.ndarray:
    """Unitary Moebius transformation (an isometry of the chordal metric)."""
    a = math.cos(alpha)
    b = math.sin(alpha) * complex(math.cos(beta), math.sin(beta))
    return np.array([[a, -np.conj(b)], [b, np.conj(a)]], dtype=complex)


_ROTATIONS = [(0.7, 1.1), (1.3, 2.9), (0.45, 4.2), (2.1, 0.3), (1.0, 5.5)]


# ---------------------------------------------------------------------------
# iteration of the lift


class _Chart:
    """A rotated copy g = R^-1 o f o R of a map, with its fixed-point equation."""

    def __init__(self, f: RationalMap, rot: np.ndarray):
        self.f = f
        self.rot = rot
        self.inv = np.linalg.inv(rot)
        a, b = f._conjugate_lift(self.inv)
        s = math.sqrt(float(np.sum(np.abs(a) ** 2) + np.sum(np.abs(b) ** 2)))
        self.a, self.b = a / s, b / s
        self.d = f.d
        self.g = RationalMap(CPoly(self.a), CPoly(self.b), check=False)

    def to_sphere(self, z):
        return mobius_apply(self.rot, z)

    def from_sphere(self, w):
        return mobius_apply(self.inv, w)

    def step(self, X, Y, DX, DY):
        P, Px, Py = _homog(self.a, X, Y, self.d)
        Q, Qx, Qy = _homog(self.b, X, Y, self.d)
        return P, Q, Px * DX + Py * DY, Qx * DX + Qy * DY

    def fixed_equation(self, n: int):
        """Evaluator of h = X_n(z,1) - z Y_n(z,1) for the Aberth machinery."""

        def evaluate(z):
            z = np.asarray(z, dtype=complex)
            big = np.abs(z) > 1
            with np.errstate(divide="ignore", invalid="ignore"):
                s0 = np.where(big, 1.0 / z, 1.0)
            X, Y = z * s0, s0 + 0j
            DX, DY = s0 + 0j, np.zeros_like(z)
            for _ in range(n):
                X, Y, DX, DY = self.step(X, Y, DX, DY)
                m = np.maximum(np.abs(X), np.abs(Y))
                m = np.where(m > 0, m, 1.0)
                X, Y, DX, DY = X / m, Y / m, DX / m, DY / m
            h = X - z * Y
            dh = DX - Y - z * DY
            az = np.abs(z)
            scale = np.abs(X) + az * np.abs(Y) + n * (1 + az) * (np.abs(DX) + np.abs(Y) + az * np.abs(DY))
            return h, dh, scale

        return evaluate

    def infinity_escape(self, n: int) -> float:
        """Chordal distance from g^n(inf) to inf in this chart."""
        w = INF
        for _ in range(n):
            w = self.g(w)
        return chordal(w, INF)

    def preimages(self, y: np.ndarray) -> np.ndarray:
        """All d preimages under g of each finite point y, shape (len(y), d)."""
        d = self.d
        c = self.a[None, :] - y[:, None] * self.b[None, :]  # ascending coeffs
        if d == 2:
            A, B, C = c[:, 2], c[:, 1], c[:, 0]
            disc = np.sqrt(B * B - 4 * A * C)
            sgn = np.where((np.conj(B) * disc).real >= 0, 1.0, -1.0)
            q = -0.5 * (B + sgn * disc)
            with np.errstate(divide="ignore", invalid="ignore"):
                r1 = np.where(A != 0, q / A, INF)
                r2 = np.where(q != 0, C / q, 0.0)
            return np.stack((r1, r2), axis=1)
        lead = c[:, -1]
        comp = np.zeros((y.size, d, d), complex)
        comp[:, 1:, :-1] = np.eye(d - 1)
        with np.errstate(divide="ignore", invalid="ignore"):
            comp[:, :, -1] = -c[:, :-1] / lead[:, None]
        ok = np.all(np.isfinite(comp), axis=(1, 2))
        out = np.full((y.size, d), INF)
        if ok.any():
            out[ok] = np.linalg.eigvals(comp[ok])
        return out

    def orbit(self, z, n: int):
        """z, g(z), ..., g^(n-1)(z)."""
        out = [np.asarray(z, dtype=complex)]
        for _ in range(n - 1):
            out.append(np.asarray(self.g(out[-1]), dtype=complex))
        return np.stack(out)

    def multiplier(self, z, n: int):
        """(g^n)'(z) by the chain rule along the orbit (z finite in this chart)."""
        orb = self.orbit(z, n)
        return np.prod(self.g.derivative(orb), axis=0)


def _chart_for(f: RationalMap, n: int) -> _Chart:
    best = None
    for alpha, beta in _ROTATIONS:
        ch = _Chart(f, _rotation(alpha, beta))
        esc = ch.infinity_escape(n)
        if esc > 1e-3:
            return ch
        if best is None or esc > best[0]:
            best = (esc, ch)
    return best[1]


def _sphere_points(n: int, radius: float = 1.0) -> np.ndarray:
    """n points spread evenly over the sphere, stereographically projected."""
    k = np.arange(n) + 0.5
    h = 1 - 2 * k / n
    phi = 2 * np.pi * k * 0.6180339887498949
    r = np.sqrt(np.maximum(0.0, 1 - h * h))
    return radius * r / (1 - h) * np.exp(1j * phi)


_TREE_BASES = (0.3141 + 0.2718j, -0.577 + 0.151j, 0.093 - 0.711j, 1.414 + 0.866j, -0.25 - 1.9j, 2.7 - 0.4j)


def _tree_seeds(ch: _Chart, n: int, base: complex) -> np.ndarray:
    """Leaves of the depth-n backward orbit tree of a generic base point."""
    crit_vals = np.array([v for v in ch.g(ch.g.critical_points()) if not is_inf(v)])
    for _ in range(20):
        if crit_vals.size == 0 or np.min(np.abs(crit_vals - base)) > 1e-2:
            break
        base = base * 1.37 + 0.11j
    level = np.array([base])
    for _ in range(n):
        fin = level[np.isfinite(level)]
        level = ch.preimages(fin).ravel()
    return level[np.isfinite(level)]


def _dedupe(z: np.ndarray, rel: float = 1e-10) -> np.ndarray:
    if z.size < 2:
        return z
    tree = cKDTree(np.column_stack((z.real, z.imag)))
    keep = np.ones(z.size, bool)
    for i, j in sorted(tree.query_pairs(rel * (1 + np.abs(z).max()))):
        if keep[i] and keep[j] and abs(z[i] - z[j]) <= rel * (1 + abs(z[i])):
            keep[j] = False
    return z[keep]


def _newton(evaluate, z, degree, maxit=40, tol=1e-12):
    """Vectorized Newton for a polynomial of the given degree.

    Outside the unit disc the iteration runs on the reversed polynomial in
    u = 1/z, which keeps far roots within reach of far seeds.
    """
    z = np.array(z, dtype=complex)
    active = np.ones(z.size, bool)
    for _ in range(maxit):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        zi = z[idx]
        h, dh, s = evaluate(zi)
        far = np.abs(zi) > 1
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            step = h / dh
            # u - u h / (D h - z h') written back in z
            u = 1 / zi
            un = u - u * h / (degree * h - zi * dh)
            znew = np.where(far, 1 / un, zi - step)
        bad = ~np.isfinite(znew)
        znew[bad] = zi[bad]
        move = np.abs(znew - zi)
        z[idx] = znew
        done = bad | (move <= 1e-15 * (1 + np.abs(znew))) | (np.abs(h) <= 1e-15 * s)
        active[idx[done]] = False
    h, dh, s = evaluate(z)
    ok = np.isfinite(z) & (np.abs(h) <= tol * s)
    return z, ok


def _solve_fixed(ch: _Chart, n: int, tol: float = 1e-12) -> np.ndarray:
    """All d^n + 1 roots of the fixed-point equation of g^n in the chart."""
    D = ch.d**n + 1
    ev = ch.fixed_equation(n)
    if D <= TREE_THRESHOLD:
        return polyroot.aberth(ev, _sphere_points(D), tol=tol)
    # Newton from backward-orbit leaves finds most roots; a few rounds with
    # different base points pick up the ones whose leaf fell outside a basin
    z = np.zeros(0, complex)
    for base in _TREE_BASES:
        w, ok = _newton(ev, _tree_seeds(ch, n, base), D, tol=tol)
        z = _dedupe(np.concatenate((z, w[ok])))
        if z.size >= D - max(8, D // 2000):
            break
    if z.size > D:
        z = z[:0]
    for _ in range(3):
        missing = D - z.size
        if missing:
            try:
                extra = polyroot.aberth(ev, _sphere_points(missing, 1.0), tol=tol, fixed=z)
            except NonConvergence as e:
                raise RootFindingFailed(str(e), best=e.details.get("best")) from e
            z = np.concatenate((z, extra))
        z = polyroot.newton_polish(ev, z, 1)
        # a root reached twice to working precision stands in for a missed one;
        # genuine multiple roots split far wider than this
        kept = _dedupe(z, 1e-13)
        if kept.size == z.size:
            return z
        z = kept
    raise RootFindingFailed(f"found {z.size} of {D} fixed points", best=z)


class FixedPoint(NamedTuple):
    point: complex
    multiplier: complex
    multiplicity: int


@dataclass(frozen=True)
class _Solved:
    chart: _Chart
    points: np.ndarray  # chart coordinates, one per cluster
    multiplicity: np.ndarray
    multiplier: np.ndarray


def _periodic_solved(f: RationalMap, n: int, tol: float = 1e-12) -> _Solved:
    key = ("pp", n, tol)
    if key in f._cache:
        return f._cache[key]
    if n < 1:
        raise DegenerateInput("period must be positive")
    if f.d**n > MAX_POINTWISE_DEGREE:
        raise PeriodTooLarge(f"{f.d}**{n} periodic points exceed the limit {MAX_POINTWISE_DEGREE}")
    ch = _chart_for(f, n)
    try:
        z = _solve_fixed(ch, n, tol)
    except NonConvergence as e:
        raise RootFindingFailed(str(e), best=e.details.get("best")) from e
    ev = ch.fixed_equation(n)
    groups = polyroot.cluster(z, polyroot.newton_steps(ev, z), tol)
    pts = np.array([c for c, _, _ in groups], dtype=complex)
    mult = np.array([k for _, k, _ in groups], dtype=int)
    if mult.sum() != ch.d**n + 1:
        raise RootFindingFailed(f"found {mult.sum()} fixed points of f^{n}, expected {ch.d**n + 1}")
    res = _Solved(ch, pts, mult, ch.multiplier(pts, n))
    f._cache[key] = res
    return res


def periodic_points(f: RationalMap, n: int, tol: float = 1e-12) -> list[FixedPoint]:
    """Fixed points of f^n with their f^n-multipliers and multiplicities.

    Multiplicities add up to d^n + 1.  Multipliers are chain-rule products
    of one-step derivatives along the orbit.
    """
    s = _periodic_solved(f, n, tol)
    pts = s.chart.to_sphere(s.points)
    return [
        FixedPoint(complex(p), complex(w), int(k))
        for p, w, k in zip(np.atleast_1d(pts), s.multiplier, s.multiplicity)
    ]


@dataclass(frozen=True)
class Cycle:
    points: tuple
    multiplier: complex

    @property
    def kind(self) -> str:
        return classify(self.multiplier)


def classify(w: complex, band: float = 1e-9) -> str:
    a = abs(w)
    if a < 1 - band:
        return "attracting"
    if a > 1 + band:
        return "repelling"
    return "neutral"


@dataclass(frozen=True)
class CycleSpectrum:
    period: int
    cycles: tuple = field(default_factory=tuple)

    @property
    def count(self) -> int:
        return len(self.cycles)

    @property
    def multipliers(self) -> np.ndarray:
        return np.array([c.multiplier for c in self.cycles], dtype=complex)

    @property
    def flags(self) -> list[str]:
        return [c.kind for c in self.cycles]

    def points(self) -> np.ndarray:
        return np.array([p for c in self.cycles for p in c.points], dtype=complex)


def exact_cycles(f: RationalMap, n: int, tol: float = 1e-12) -> CycleSpectrum:
    """Cycles of exact period n, each with its multiplier."""
    key = ("cyc", n, tol)
    if key in f._cache:
        return f._cache[key]
    top = _periodic_solved(f, n, tol)
    ch = top.chart
    if np.any(top.multiplicity > 1):
        bad = ch.to_sphere(top.points[top.multiplicity > 1])
        raise AmbiguousPeriod(
            f"multiple fixed point of f^{n} (parabolic collision)", points=np.atleast_1d(bad)
        )
    sphere = np.atleast_1d(ch.to_sphere(top.points))
    lower = np.zeros(sphere.size, bool)
    for k in divisors(n)[:-1]:
        low = _periodic_solved(f, k, tol)
        lp = np.atleast_1d(low.chart.to_sphere(low.points))
        dist = chordal(sphere[:, None], lp[None, :])
        lower |= np.min(dist, axis=1) < SAME_POINT
    keep = np.flatnonzero(~lower)
    expected = nu(f.d, n)
    if keep.size != expected:
        raise AmbiguousPeriod(
            f"{keep.size} points of exact period {n}, expected {expected}",
            points=sphere[keep],
        )
    pts = top.points[keep]
    cycles = []
    if pts.size:
        tree = cKDTree(np.column_stack((pts.real, pts.imag)))
        img = np.asarray(ch.g(pts), dtype=complex)
        _, nxt = tree.query(np.column_stack((img.real, img.imag)))
        seen = np.zeros(pts.size, bool)
        for i in range(pts.size):
            if seen[i]:
                continue
            orbit = [i]
            j = nxt[i]
            while j != i and len(orbit) <= n:
                orbit.append(j)
                j = nxt[j]
            if len(orbit) != n or seen[orbit].any():
                raise AmbiguousPeriod(
                    f"orbit of a period-{n} point does not close after {n} steps",
                    points=np.atleast_1d(ch.to_sphere(pts[orbit])),
                )
            seen[orbit] = True
            w = complex(np.prod(ch.g.derivative(pts[orbit])))
            cycles.append(Cycle(tuple(complex(p) for p in np.atleast_1d(ch.to_sphere(pts[orbit]))), w))
    spec = CycleSpectrum(n, tuple(cycles))
    f._cache[key] = spec
    return spec


# ---------------------------------------------------------------------------
# Green function of the lift


def green(f: RationalMap, point, iters: int, return_bound: bool = False):
    """lim d^-n ln ||F^n(point)|| for the lift F of unit max-norm, from iters steps.

    Vectors are measured in the max-norm as well, so that e.g. G(1, 1) = 0
    exactly for F = (z^2, w^2).
    The vector is renormalized at every step and the logarithms of the
    extracted scalars are accumulated, so nothing overflows.  With
    ``return_bound`` the constant C with |G_{iters+1} - G_iters| <= C d^-iters
    is returned as well.

    The remaining tail sum_{k >= iters} d^-(k+1) ln m_k is estimated as a
    geometric series in the last increment ln m_iters.  That is exact once
    the increments settle (escaping orbits) and adds nothing when they
    vanish.
    """
    a, b = f.lift(normalized=True)
    d = f.d
    x, y = (complex(point[0]), complex(point[1]))
    nrm = max(abs(x), abs(y))
    if not nrm > 0:
        raise IndeterminatePoint("point (0, 0) has no image")
    x, y = x / nrm, y / nrm
    logsum = math.log(nrm)  # ln of accumulated scalars, weighted below
    total = logsum
    incr = 0.0
    for k in range(iters + 1):
        P = complex(_homog(a, np.array([x]), np.array([y]), d)[0][0])
        Q = complex(_homog(b, np.array([x]), np.array([y]), d)[0][0])
        m = max(abs(P), abs(Q))
        if m < 1e-14:
            raise IndeterminatePoint("orbit entered a neighbourhood of (0, 0)", step=k)
        if k == iters:
            incr = math.log(m)
            break
        total += math.log(m) / d ** (k + 1)
        x, y = P / m, Q / m
    total += incr / (d**iters * (d - 1))
    if return_bound:
        # G_{iters+1} - G_iters = d^-(iters+1) ln ||F(v)|| with ||v|| = 1
        return total, abs(incr) / d
    return total


def escape_rate(c: complex, z: complex, iters: int, radius: float = 1e100) -> float:
    """2^-iters ln|p_c^iters(z)| for p_c = z^2 + c, tracked in logarithms."""
    z = complex(z)
    for k in range(iters):
        if abs(z) > radius:
            # from here on p(z) = z^2 (1 + c/z^2) with |c/z^2| below rounding
            return math.log(abs(z)) / 2**k
        z = z * z + c
    return math.log(abs(z)) / 2**iters if z != 0 else -math.inf
