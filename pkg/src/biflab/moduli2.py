"""The moduli space of quadratic rational maps in Milnor coordinates.

A conjugacy class of degree-2 maps is identified with the point
lambda = (sigma1, sigma2) of C^2, where sigma_i are the elementary symmetric
functions of the three fixed-point multipliers.  The third one is forced:
sigma3 = sigma1 - 2.

Multiplier polynomials p_n(lambda, w) are handled numerically: at a given
lambda they are built from the exact-period-n cycle multipliers of a
representative map.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import polyroot, ratmap
from .errors import BiflabError, CountMismatch, DegenerateModuli, NotInComponent
from .polyroot import CPoly
from .ratmap import RationalMap


@dataclass(frozen=True)
class ModuliPoint:
    l1: complex
    l2: complex
    # sigma3 - sigma1 + 2 as measured on the map this point came from
    residual: float = field(default=0.0, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "l1", complex(self.l1))
        object.__setattr__(self, "l2", complex(self.l2))

    @property
    def sigma1(self) -> complex:
        return self.l1

    @property
    def sigma2(self) -> complex:
        return self.l2

    @property
    def sigma3(self) -> complex:
        return self.l1 - 2

    def as_array(self) -> np.ndarray:
        return np.array([self.l1, self.l2])

    def __sub__(self, other: "ModuliPoint") -> float:
        """Euclidean distance in C^2."""
        return float(np.linalg.norm(self.as_array() - other.as_array()))

    @classmethod
    def from_quadratic(cls, c: complex) -> "ModuliPoint":
        """Image of z^2 + c; multipliers 0 at infinity and 1 +- sqrt(1 - 4c)."""
        return cls(2.0, 4 * complex(c))


def fixed_multipliers(lam: ModuliPoint) -> np.ndarray:
    """The three fixed-point multipliers, sorted by modulus."""
    w = polyroot.roots_flat(p1_poly(lam))
    return w[np.argsort(np.abs(w), kind="stable")]


def p1_poly(lam: ModuliPoint) -> CPoly:
    return CPoly([-lam.sigma3, lam.sigma2, -lam.sigma1, 1])


_PAIRINGS = ((0, 1), (0, 2), (1, 2))


def normal_form(lam: ModuliPoint) -> RationalMap:
    """z (z + mu1) / (mu2 z + 1): fixed points 0 and infinity with multipliers mu1, mu2."""
    if not (np.isfinite(lam.l1) and np.isfinite(lam.l2)):
        raise DegenerateModuli("moduli point is not finite", point=lam)
    mu = fixed_multipliers(lam)
    for i, j in _PAIRINGS:
        if abs(mu[i] * mu[j] - 1) > 1e-10:
            return RationalMap(CPoly([0, mu[i], 1]), CPoly([1, mu[j]]))
    raise DegenerateModuli("every pair of fixed multipliers multiplies to 1", multipliers=mu)


def coords(f: RationalMap) -> ModuliPoint:
    """Milnor coordinates of a quadratic map, from its fixed-point multipliers."""
    if f.d != 2:
        raise ValueError("coords is defined for quadratic maps only")
    w = []
    for fp in ratmap.periodic_points(f, 1):
        # a multiple fixed point is parabolic with multiplier exactly 1
        w.extend([fp.multiplier] if fp.multiplicity == 1 else [1.0] * fp.multiplicity)
    w = np.asarray(w, dtype=complex)
    s1 = w.sum()
    s2 = w[0] * w[1] + w[0] * w[2] + w[1] * w[2]
    s3 = w.prod()
    return ModuliPoint(s1, s2, residual=float(abs(s3 - s1 + 2)))


@dataclass(frozen=True)
class MultiplierPoly:
    period: int
    poly: CPoly
    roots: np.ndarray

    @property
    def degree(self) -> int:
        return self.poly.degree

    def __call__(self, w):
        return self.poly(w)

    def scaled(self, w) -> float:
        """|p(w)| relative to the size of its factors, for residual tests."""
        w = complex(w)
        scale = np.prod(np.maximum(1.0, np.maximum(abs(w), np.abs(self.roots))))
        return float(abs(self.poly(w)) / scale)

    def count_in_disc(self, radius: float = 1.0) -> int:
        return int(np.sum(np.abs(self.roots) < radius))


def pn(lam: ModuliPoint, n: int, tol: float = 1e-12) -> MultiplierPoly:
    """p_n(lam, .) as the monic polynomial over the exact-n cycle multipliers."""
    if n < 1:
        raise ValueError("period must be positive")
    if n == 1:
        p = p1_poly(lam)
        return MultiplierPoly(1, p, polyroot.roots_flat(p))
    spec = ratmap.exact_cycles(normal_form(lam), n, tol)
    w = spec.multipliers
    return MultiplierPoly(n, CPoly.from_roots(w), w)


def per1_line(w: complex):
    """Coefficients (a, b, c) of Per_1(w): a l1 + b l2 + c = 0."""
    w = complex(w)
    return (w * w + 1, -w, -(w**3 + 2))


@dataclass(frozen=True)
class CountTable:
    nu2: np.ndarray  # index n; entry 0 unused
    N2: np.ndarray

    def __getitem__(self, n: int) -> int:
        return int(self.N2[n])


def count_table(n_max: int) -> CountTable:
    """nu2(1) = 2 and 2^n = sum over k | n of nu2(k); N2 = nu2 / 2."""
    if n_max < 1:
        raise ValueError("n_max must be at least 1")
    nu2 = np.zeros(n_max + 1, dtype=object)
    for n in range(1, n_max + 1):
        nu2[n] = 2**n - sum(nu2[k] for k in ratmap.divisors(n)[:-1])
    return CountTable(nu2, nu2 // 2)


def multiplier_pair(lam: ModuliPoint, n: int, m: int):
    """phi_{n,m}(lam): the unique roots of p_n and p_m in the open unit disc."""
    if n == m:
        raise ValueError("periods must differ")
    out, counts = [], []
    for k in (n, m):
        r = pn(lam, k).roots
        inside = r[np.abs(r) < 1]
        counts.append(inside.size)
        out.append(inside[0] if inside.size == 1 else None)
    if counts != [1, 1]:
        raise NotInComponent(
            f"roots in the unit disc: {counts[0]} for p_{n}, {counts[1]} for p_{m}",
            counts=tuple(counts),
        )
    return complex(out[0]), complex(out[1])


@dataclass(frozen=True)
class AffineLine:
    """s -> origin + s * direction, a complex line in C^2."""

    origin: tuple
    direction: tuple

    def __call__(self, s) -> ModuliPoint:
        s = complex(s)
        return ModuliPoint(self.origin[0] + s * self.direction[0], self.origin[1] + s * self.direction[1])

    def points(self, s) -> np.ndarray:
        """Vectorized: array of shape s.shape + (2,)."""
        s = np.asarray(s, dtype=complex)
        return np.stack((self.origin[0] + s * self.direction[0], self.origin[1] + s * self.direction[1]), -1)

    @classmethod
    def polynomial(cls) -> "AffineLine":
        """The line of quadratic polynomials z^2 + c, parametrized by c."""
        return cls((2.0 + 0j, 0j), (0j, 4.0 + 0j))

    @property
    def is_polynomial(self) -> bool:
        return self == AffineLine.polynomial()

    @classmethod
    def per1(cls, eta: complex) -> "AffineLine":
        a, b, c = per1_line(eta)
        nrm = abs(a) ** 2 + abs(b) ** 2
        origin = (-c * np.conj(a) / nrm, -c * np.conj(b) / nrm)
        return cls((complex(origin[0]), complex(origin[1])), (complex(-b), complex(a)))


@dataclass(frozen=True)
class LineRoots:
    params: np.ndarray
    points: list
    residuals: np.ndarray


def _interp_coeffs(q, degree, radius, phase):
    """Coefficients of q(rho u) in u, rho = radius e^{i phase}, from samples on |u| = 1."""
    M = 1 << int(np.ceil(np.log2(2 * (degree + 1))))
    u = np.exp(2j * np.pi * np.arange(M) / M)
    rho = radius * np.exp(1j * phase)
    vals = np.array([q(rho * x) for x in u])
    return np.fft.fft(vals) / M, rho


def line_roots(
    line: AffineLine, n: int, w: complex, degree: int, radius: float = 4.0, grow: bool = True
) -> LineRoots:
    """Roots s of q(s) = p_n(line(s), w), a polynomial of the given degree in s.

    q is sampled on a circle, interpolated by FFT, root-found and polished by
    Newton on the pointwise values.
    """
    w = complex(w)

    def q(s):
        return complex(pn(line(s), n)(w))

    coeffs = None
    for attempt in range(4):
        try:
            coeffs, rho = _interp_coeffs(q, degree, radius * (1 + 0.173 * attempt), 0.31 * attempt + 0.05)
            break
        except BiflabError:
            continue
    if coeffs is None:
        raise CountMismatch(f"p_{n} could not be sampled along the line", n=n, w=w)
    head = np.abs(coeffs[: degree + 1]).max()
    tail = np.abs(coeffs[degree + 1 :]).max(initial=0.0) if coeffs.size > degree + 1 else 0.0
    upoly = CPoly(np.where(np.abs(coeffs[: degree + 1]) > 1e-13 * head, coeffs[: degree + 1], 0))
    if upoly.degree != degree or tail > 1e-6 * head:
        raise CountMismatch(
            f"restriction of p_{n} has degree {upoly.degree}, expected {degree}",
            found=upoly.degree,
            expected=degree,
            tail=tail / head,
        )
    u0 = polyroot.roots_flat(upoly)
    far = np.abs(u0).max(initial=0.0)
    if far > 1 and grow:
        # enlarge the circle; far out the pointwise solver can fail, so back off
        # towards the current radius and polish from the largest usable circle
        target = 1.25 * far * radius
        while target > 1.05 * radius:
            try:
                return line_roots(line, n, w, degree, radius=target, grow=target >= 1.25 * far * radius)
            except CountMismatch:
                target *= 0.8
    s0 = rho * u0
    poly = CPoly(upoly.coeffs / rho ** np.arange(degree + 1))
    dpoly = poly.deriv()
    params = np.array([_polish(q, dpoly, complex(s)) for s in s0])
    res = [_residual(line, n, w, s, poly) for s in params]
    for i, s in enumerate(params):
        # a large circle loses the inner roots to cancellation; re-solve locally
        if res[i] < LOCAL_RESIDUAL:
            continue
        t = _local_root(q, degree, s)
        if t is not None:
            r = _residual(line, n, w, t, poly)
            others = np.delete(params, i)
            taken = others.size and np.min(np.abs(others - t)) <= 1e-8 * (1 + abs(t))
            if r < res[i] and not taken:
                params[i], res[i] = t, r
    return LineRoots(params, [line(s) for s in params], np.array(res))


LOCAL_RESIDUAL = 1e-10


def _residual(line, n, w, s, poly):
    try:
        return pn(line(s), n).scaled(w)
    except BiflabError:
        return abs(poly(s)) / max(1.0, abs(poly.deriv()(s)))


def _local_root(q, degree, s):
    """Root nearest s of q, interpolated on a circle of radius ~2|s|."""
    for attempt in range(3):
        try:
            coeffs, rho = _interp_coeffs(q, degree, max(2.0 * abs(s), 1.0) * (1 + 0.11 * attempt), 0.7 + 0.23 * attempt)
            break
        except BiflabError:
            continue
    else:
        return None
    local = CPoly(coeffs[: degree + 1])
    if local.degree < 1:
        return None
    z = rho * polyroot.roots_flat(local)
    t = complex(z[np.argmin(np.abs(z - s))])
    poly = CPoly(local.coeffs / rho ** np.arange(local.degree + 1))
    return _polish(q, poly.deriv(), t)


def _polish(q, dq_approx, s, steps=16):
    """Secant iteration on the pointwise q, started with one Newton step on
    the interpolant's derivative; keeps the interpolated root if q fails."""
    try:
        val = q(s)
        dq = complex(dq_approx(s))
        for _ in range(steps):
            if dq == 0 or val == 0:
                break
            t = s - val / dq
            vt = q(t)
            if not abs(vt) < abs(val):
                break
            small = abs(t - s) <= 1e-15 * (1 + abs(t))
            dq = (vt - val) / (t - s)
            s, val = t, vt
            if small:
                break
    except BiflabError:
        pass
    return s


SAMPLE_RESIDUAL = 1e-6


def per_curve_samples(n: int, w: complex, eta: complex) -> list:
    """Per_n(w) intersected with Per_1(eta), N2(n) points with multiplicity."""
    if not (abs(w) < 1 and abs(eta) < 1):
        raise ValueError("w and eta must lie in the open unit disc")
    N = count_table(n)[n]
    line = AffineLine.per1(eta)
    r = line_roots(line, n, w, N)
    if len(r.points) != N:
        raise CountMismatch(f"found {len(r.points)} points, expected {N}", residuals=r.residuals)
    bad = int(np.sum(~(r.residuals < SAMPLE_RESIDUAL)))
    if bad:
        raise CountMismatch(
            f"{bad} of {N} points fail the residual check (max {np.max(r.residuals):.2g})",
            residuals=r.residuals,
        )
    return r.points
