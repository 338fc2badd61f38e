"""Estimators of the Lyapunov exponent L(f) = int ln|f'| dmu_f.

Three independent routes are offered: repelling cycles, the Green function
at the critical point (quadratic polynomials), and Monte-Carlo sampling of
mu_f by random backward orbits.  The family approximants L_n^0 and L_n live
here too; they are functions of a moduli point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import cache as _cache
from . import moduli2, ratmap
from .errors import CriticalPullback
from .ratmap import RationalMap

LN2 = math.log(2.0)

# bounded critical orbits are detected at this radius (|z| > 2 escapes for |c| <= 2)
ESCAPE_RADIUS = 4.0


@dataclass(frozen=True)
class LyapEstimate:
    value: float
    method: str
    order: int
    error: float = 0.0
    minus_infinity: bool = False

    def __float__(self) -> float:
        return -math.inf if self.minus_infinity else float(self.value)


def lyap_cycles(f: RationalMap, n: int, exact_period_only: bool = False, tol: float = 1e-12, cache=None) -> LyapEstimate:
    """d^-n sum over repelling points of (1/n) ln|(f^n)'|.

    With ``exact_period_only`` only points of exact period n enter; otherwise
    every repelling fixed point of f^n does.  ``error`` is the weight of the
    points left out, each counted at ln d.  ``cache`` is an optional
    ``biflab.cache.Cache``.
    """
    d = f.d
    if exact_period_only:
        spec = _cache.exact_cycles(f, n, tol, cache)
        w = np.abs(spec.multipliers)
        rep = w > 1
        # each of the n points of a cycle carries (1/n) ln|w|
        total = float(np.sum(np.log(w[rep])))
        left = n * int(np.sum(~rep))
    else:
        total, left = 0.0, 0
        for p in _cache.periodic_points(f, n, tol, cache):
            a = abs(p.multiplier)
            if a > 1:
                total += p.multiplicity * math.log(a) / n
            else:
                left += p.multiplicity
    scale = float(d) ** -n
    return LyapEstimate(total * scale, "cycles", n, error=left * math.log(d) * scale)


def green_critical(c: complex, iters: int = 60) -> tuple[float, float]:
    """G_c(0) for z^2 + c and a bound on its truncation error.

    Zero when the critical orbit stays within ESCAPE_RADIUS for all iters.
    """
    c = complex(c)
    z = 0j
    for k in range(iters):
        z = z * z + c
        a = abs(z)
        if a > ESCAPE_RADIUS:
            # ln|z_{j+1}| = 2 ln|z_j| + ln|1 + c/z_j^2|, summed until the tail is negligible
            g = math.log(a) / 2 ** (k + 1)
            j = k + 1
            while a < 1e150 and j < k + 1200:
                z = z * z + c
                a = abs(z)
                j += 1
                g = math.log(a) / 2**j
            return g, abs(c) / a / a / 2**j
    return 0.0, 2.0**-iters


def lyap_green_quadratic_poly(c: complex, iters: int = 60) -> LyapEstimate:
    """ln 2 + G_c(0): the Lyapunov exponent of z^2 + c from its critical point."""
    if iters < 20:
        raise ValueError("iters must be at least 20")
    g, err = green_critical(c, iters)
    return LyapEstimate(LN2 + g, "green-critical", iters, error=err)


def _critical_values(ch) -> np.ndarray:
    cv = np.asarray(ch.g(ch.g.critical_points()), dtype=complex)
    return cv[np.isfinite(cv)]


def lyap_mc(f: RationalMap, samples: int = 100_000, depth: int = 30, seed: int = 0, start=None) -> LyapEstimate:
    """Average of ln of the spherical derivative over backward-orbit samples of mu_f.

    Each sample pulls the start point back ``depth`` times, choosing one of
    the d preimages uniformly at random.  Samples passing within 1e-12 of a
    critical value are redrawn; 100 consecutive redraws raise.
    """
    if samples < 1000 or depth < 20:
        raise ValueError("need samples >= 1000 and depth >= 20")
    rng = np.random.default_rng(seed)
    # a unitary chart keeps the spherical metric and avoids infinite preimages
    ch = ratmap._chart_for(f, 1)
    cv = _critical_values(ch)
    z0 = complex(ch.from_sphere(start)) if start is not None else 0.3141 + 0.2718j
    d = f.d
    out = np.empty(samples, complex)
    todo = np.arange(samples)
    fails = 0
    while todo.size:
        z = np.full(todo.size, z0)
        ok = np.ones(todo.size, bool)
        for _ in range(depth):
            if cv.size:
                ok &= np.min(np.abs(z[:, None] - cv[None, :]), axis=1) > 1e-12
            pre = ch.preimages(z)
            pick = rng.integers(0, d, size=z.size)
            z = pre[np.arange(z.size), pick]
            ok &= np.isfinite(z)
            z = np.where(np.isfinite(z), z, 0)
        out[todo[ok]] = z[ok]
        if ok.any():
            fails = 0
        else:
            fails += 1
            if fails >= 100:
                raise CriticalPullback("backward orbits keep hitting critical values", attempts=fails)
        todo = todo[~ok]
    logs = np.log(ch.g.spherical_derivative(out))
    value = float(np.mean(logs))
    se = float(np.std(logs, ddof=1) / math.sqrt(samples))
    return LyapEstimate(value, "monte-carlo", samples, error=se)


def family_Ln0(lam: moduli2.ModuliPoint, n: int) -> LyapEstimate:
    """2^-n ln|p_n(lam, 0)|; minus infinity on Per_n(0)."""
    w = np.abs(moduli2.pn(lam, n).roots)
    if np.any(w <= 1e-12):
        return LyapEstimate(-math.inf, "family-Ln0", n, minus_infinity=True)
    return LyapEstimate(float(np.sum(np.log(w))) / 2**n, "family-Ln0", n)


def family_Ln(lam: moduli2.ModuliPoint, n: int) -> LyapEstimate:
    """2^-n sum of log+ |w_{n,j}(lam)|; never negative."""
    w = np.abs(moduli2.pn(lam, n).roots)
    big = w[w > 1]
    return LyapEstimate(float(np.sum(np.log(big))) / 2**n, "family-Ln", n)
