"""The quadratic family z^2 + c: centers, the Green function of M, and Levin's check.

P_n(c) = p_c^n(0) has degree 2^(n-1) and simple roots, the centers of
hyperbolic components of period dividing n.  Q_n collects those of exact
period n.  The vectorized critical-orbit helpers at the bottom feed the fast
evaluation of Lyapunov fields on the polynomial line.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import polyroot, ratmap
from .errors import DeflationMismatch
from .lyapunov import ESCAPE_RADIUS, green_critical
from .measure import DiscreteMeasure, potential
from .moduli2 import count_table
from .polyroot import CPoly
from .tables import write_csv

MAX_CENTER_PERIOD = 14

# integer coefficients are formed only while they stay cheap to multiply
MAX_EXACT_PERIOD = 11


def center_evaluator(n: int):
    """(P_n, P_n', scale) at c, overflow-safe.

    Once |P_k| is huge only the ratio P'/P is carried, returned as (1, P'/P).
    """

    def evaluate(c):
        c = np.asarray(c, dtype=complex)
        p = c.copy()
        dp = np.ones_like(c)
        s = np.abs(c)
        big = np.zeros(c.shape, bool)
        r = np.zeros_like(c)  # P'/P where big
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            for _ in range(n - 1):
                nb = ~big
                pk = p
                p = np.where(nb, pk * pk + c, p)
                dp = np.where(nb, 2 * pk * dp + 1, dp)
                s = np.where(nb, 2 * np.abs(pk) * s + np.abs(c), s)
                # huge values: follow the logarithmic derivative only
                inv2 = (1 / pk) ** 2
                r = np.where(big, (2 * r + inv2) / (1 + c * inv2), r)
                fresh = nb & (np.abs(p) > 1e100)
                r = np.where(fresh, dp / p, r)
                big |= fresh
        p = np.where(big, 1.0 + 0j, p)
        dp = np.where(big, r, dp)
        s = np.where(big, 0.0, s)
        return p, dp, s

    return evaluate


def _disc_guesses(k: int, center=-0.6, radius=1.6) -> np.ndarray:
    j = np.arange(k) + 0.5
    return center + radius * np.sqrt(j / k) * np.exp(2j * np.pi * 0.6180339887498949 * j)


@lru_cache(maxsize=None)
def _p_roots(n: int) -> np.ndarray:
    """All 2^(n-1) roots of P_n."""
    if n == 1:
        return np.zeros(1, complex)
    ev = center_evaluator(n)
    z = polyroot.aberth(ev, _disc_guesses(2 ** (n - 1)), tol=1e-12)
    # conjugation symmetry: snap nearly real roots onto the axis
    z = np.where(np.abs(z.imag) < 1e-13, z.real + 0j, z)
    z.setflags(write=False)
    return z


@lru_cache(maxsize=None)
def _p_int(n: int) -> tuple:
    """Integer coefficients of P_n, ascending."""
    p = np.array([0, 1], dtype=object)
    for _ in range(n - 1):
        q = np.convolve(p, p)
        q[1] += 1
        p = q
    return tuple(int(v) for v in p)


def _int_divide(num, den):
    num = list(num)
    den = list(den)
    while den and den[-1] == 0:
        den.pop()
    out = [0] * (len(num) - len(den) + 1)
    for i in range(len(out) - 1, -1, -1):
        q, r = divmod(num[i + len(den) - 1], den[-1])
        if r:
            raise DeflationMismatch("center polynomial does not divide exactly")
        out[i] = q
        for j, dj in enumerate(den):
            num[i + j] -= q * dj
    if any(num[: len(den) - 1]):
        raise DeflationMismatch("nonzero remainder in center deflation")
    return tuple(out)


@lru_cache(maxsize=None)
def _q_int(n: int) -> tuple:
    q = _p_int(n)
    for k in ratmap.divisors(n)[:-1]:
        q = _int_divide(q, _q_int(k))
    return q


@dataclass(frozen=True)
class CenterSet:
    period: int
    centers: np.ndarray  # roots of Q_n
    p_roots: np.ndarray  # all roots of P_n
    q_coeffs: tuple | None  # exact integer coefficients of Q_n when formed

    @property
    def count(self) -> int:
        return self.centers.size

    @property
    def q_poly(self) -> CPoly | None:
        if self.q_coeffs is None:
            return None
        c = np.array([float(v) for v in self.q_coeffs])
        return CPoly(c) if np.all(np.isfinite(c)) else None


@lru_cache(maxsize=None)
def center_poly(n: int) -> CenterSet:
    """Centers of the hyperbolic components of exact period n."""
    if not 1 <= n <= MAX_CENTER_PERIOD:
        raise ValueError(f"period must lie in 1..{MAX_CENTER_PERIOD}")
    z = _p_roots(n)
    lower = np.zeros(z.size, bool)
    for k in ratmap.divisors(n)[:-1]:
        low = _p_roots(k)
        d = np.abs(z[:, None] - low[None, :]).min(axis=1)
        lower |= d < 1e-8
    centers = z[~lower]
    expected = count_table(n)[n]
    if centers.size != expected:
        raise DeflationMismatch(
            f"{centers.size} centers of exact period {n}, expected {expected}",
            found=centers.size,
            expected=expected,
        )
    q = _q_int(n) if n <= MAX_EXACT_PERIOD else None
    return CenterSet(n, centers, z, q)


def green_M(c: complex, iters: int = 60) -> float:
    """G_M(c) = G_c(c): escape rate of the critical value; 0 on M."""
    if iters < 25:
        raise ValueError("iters must be at least 25")
    # the critical value is one step along the critical orbit
    return 2 * green_critical(c, iters + 1)[0]


def levin_measure(n: int) -> DiscreteMeasure:
    """Probability measure on the roots of P_n."""
    return DiscreteMeasure.uniform(_p_roots(n))


def levin_gap(n: int, test_points) -> float:
    """max over test points of |potential(rho_n, z) - G_M(z)|."""
    pts = np.atleast_1d(np.asarray(test_points, dtype=complex))
    g = np.array([green_M(z) for z in pts])
    if np.any(g <= 0.05):
        raise ValueError("test points must lie outside M (green_M > 0.05)")
    rho = levin_measure(n)
    return float(max(abs(potential(rho, z) - gz) for z, gz in zip(pts, g)))


def export_centers(path, sets) -> str:
    rows = [(s.period, z.real, z.imag) for s in sets for z in _sorted(s.centers)]
    return write_csv(path, ["period", "re", "im"], rows)


def export_measure(path, m: DiscreteMeasure) -> str:
    order = np.lexsort((m.locations.imag, m.locations.real))
    rows = [(m.locations[i].real, m.locations[i].imag, m.weights[i]) for i in order]
    return write_csv(path, ["re", "im", "weight"], rows)


def _sorted(z):
    return z[np.lexsort((z.imag, z.real))]


# ---------------------------------------------------------------------------
# vectorized critical orbits


def critical_logs(c, nmax: int) -> np.ndarray:
    """ln|P_k(c)| for k = 1..nmax, shape (nmax,) + c.shape."""
    c = np.asarray(c, dtype=complex)
    out = np.empty((nmax,) + c.shape)
    z = c.copy()
    logz = np.zeros(c.shape)
    big = np.zeros(c.shape, bool)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        for k in range(nmax):
            if k:
                logz = np.where(big, 2 * logz, logz)
                z = np.where(big, z, z * z + c)
            fresh = ~big & (np.abs(z) > 1e150)
            logz = np.where(big, logz, np.log(np.abs(z)))
            big |= fresh
            out[k] = logz
    return out


def attracting_cycle(c, nmax: int, burn: int = 400, newton: int = 12):
    """Period (0 if none of period <= nmax) and multiplier of the attracting cycle of z^2+c."""
    c = np.asarray(c, dtype=complex)
    z = np.zeros_like(c)
    alive = np.ones(c.shape, bool)
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(burn):
            z = np.where(alive, z * z + c, z)
            alive &= np.abs(z) <= ESCAPE_RADIUS
    period = np.zeros(c.shape, int)
    mult = np.zeros(c.shape, complex)
    for k in range(1, nmax + 1):
        todo = alive & (period == 0)
        if not todo.any():
            break
        cc = c[todo]
        w = z[todo]
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            for _ in range(newton):
                u, du = w, np.ones_like(w)
                for _ in range(k):
                    du = 2 * u * du
                    u = u * u + cc
                w = w - (u - w) / (du - 1)
            u, du = w, np.ones_like(w)
            for _ in range(k):
                du = 2 * u * du
                u = u * u + cc
        ok = np.isfinite(u) & (np.abs(u - w) <= 1e-10 * (1 + np.abs(w))) & (np.abs(du) < 1)
        idx = np.flatnonzero(todo.ravel())[ok]
        period.ravel()[idx] = k
        mult.ravel()[idx] = du[ok]
    return period, mult
