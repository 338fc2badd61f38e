"""Complex univariate polynomials and simultaneous root finding.

Roots are computed with the Aberth-Ehrlich iteration followed by a short
Newton polish.  The iteration works on any polynomial that can be evaluated
pointwise, so callers with an accurate evaluation scheme (iterated maps,
recursively defined polynomials, product forms) never have to expand
coefficients.  Multiple roots come back as clusters with a multiplicity
estimate.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from .errors import DegenerateInput, NonConvergence, Overflow

EPS = np.finfo(float).eps

# symbolic composition is refused beyond this degree
MAX_SYMBOLIC_DEGREE = 4096

# evaluator signature: z -> (value, derivative, error scale)
Evaluator = Callable[[np.ndarray], tuple]


@dataclass(frozen=True, eq=False)
class CPoly:
    """Polynomial with complex coefficients in ascending order of degree."""

    coeffs: np.ndarray

    def __init__(self, coeffs):
        c = np.atleast_1d(np.asarray(coeffs, dtype=complex)).copy()
        if c.ndim != 1 or c.size == 0:
            raise DegenerateInput("need a non-empty 1-d coefficient sequence")
        nz = np.flatnonzero(c)
        c = c[: nz[-1] + 1] if nz.size else c[:1]
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def from_roots(cls, roots) -> "CPoly":
        """Monic polynomial with the given roots."""
        c = np.array([1.0 + 0j])
        for r in np.atleast_1d(np.asarray(roots, dtype=complex)):
            c = np.concatenate(([0j], c)) - r * np.concatenate((c, [0j]))
        return cls(c)

    @property
    def degree(self) -> int:
        return self.coeffs.size - 1

    @property
    def leading(self) -> complex:
        return complex(self.coeffs[-1])

    def is_zero(self) -> bool:
        return self.coeffs.size == 1 and self.coeffs[0] == 0

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        p = np.full(z.shape, self.coeffs[-1], dtype=complex)
        for a in self.coeffs[-2::-1]:
            p = p * z + a
        return p

    def evaluate(self, z):
        """Value, derivative and rounding scale sum |a_k||z|^k.

        Outside the unit disc all three are divided by z**(n-1) (Horner on
        the reversed polynomial in 1/z), which keeps high degrees finite
        without changing p/p' or the relative residual.
        """
        z = np.asarray(z, dtype=complex)
        shape = z.shape
        z = z.ravel()
        p = np.empty(z.shape, complex)
        dp = np.empty(z.shape, complex)
        s = np.empty(z.shape)
        big = np.abs(z) > 1.0
        inner = ~big
        if inner.any():
            p[inner], dp[inner], s[inner] = _horner3(self.coeffs, z[inner])
        if big.any():
            n = self.degree
            u = 1.0 / z[big]
            q, dq, sq = _horner3(self.coeffs[::-1], u)
            # p = z^n q(u), p' = z^(n-1) (n q(u) - u q'(u))
            p[big] = q / u
            dp[big] = n * q - u * dq
            s[big] = sq / np.abs(u)
        return p.reshape(shape), dp.reshape(shape), s.reshape(shape)

    def deriv(self) -> "CPoly":
        if self.degree == 0:
            return CPoly([0])
        return CPoly(self.coeffs[1:] * np.arange(1, self.coeffs.size))

    def conj(self) -> "CPoly":
        return CPoly(np.conj(self.coeffs))

    def monic(self) -> "CPoly":
        return CPoly(self.coeffs / self.coeffs[-1])

    def __add__(self, other):
        other = _as_cpoly(other)
        n = max(self.coeffs.size, other.coeffs.size)
        c = np.zeros(n, dtype=complex)
        c[: self.coeffs.size] += self.coeffs
        c[: other.coeffs.size] += other.coeffs
        return CPoly(c)

    __radd__ = __add__

    def __neg__(self):
        return CPoly(-self.coeffs)

    def __sub__(self, other):
        return self + (-_as_cpoly(other))

    def __rsub__(self, other):
        return _as_cpoly(other) - self

    def __mul__(self, other):
        other = _as_cpoly(other)
        return CPoly(np.convolve(self.coeffs, other.coeffs))

    __rmul__ = __mul__

    def __pow__(self, k: int):
        out = CPoly([1])
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def __repr__(self):
        return f"CPoly(degree={self.degree}, coeffs={np.array2string(self.coeffs, precision=6)})"


def _horner3(c, z):
    az = np.abs(z)
    p = np.full(z.shape, c[-1], dtype=complex)
    dp = np.zeros(z.shape, dtype=complex)
    s = np.full(z.shape, abs(c[-1]))
    for a in c[-2::-1]:
        dp = dp * z + p
        p = p * z + a
        s = s * az + abs(a)
    return p, dp, s


def _as_cpoly(x) -> CPoly:
    return x if isinstance(x, CPoly) else CPoly([x])


# ---------------------------------------------------------------------------
# Aberth-Ehrlich iteration


def _repulsion(z: np.ndarray, rows: np.ndarray, fixed: np.ndarray | None = None) -> np.ndarray:
    """sum_{j != i} 1/(z_i - z_j) for i in rows, plus the same sum over ``fixed``."""
    out = np.zeros(rows.size, dtype=complex)
    if rows.size == 0:
        return out
    others = z if fixed is None else np.concatenate((z, fixed))
    chunk = max(1, (1 << 21) // others.size)
    with np.errstate(divide="ignore", invalid="ignore"):
        for s in range(0, rows.size, chunk):
            r = rows[s : s + chunk]
            diff = z[r, None] - others[None, :]
            diff[np.arange(r.size), r] = np.inf
            inv = 1.0 / diff
            inv[~np.isfinite(inv)] = 0.0
            out[s : s + chunk] = inv.sum(axis=1)
    return out


def aberth(
    evaluate: Evaluator,
    init,
    tol: float = 1e-12,
    maxiter: int = 500,
    fixed=None,
    polish: int = 2,
) -> np.ndarray:
    """Run the Aberth-Ehrlich iteration from ``init``.

    ``evaluate`` maps an array of points to ``(p, p', scale)`` where ``scale``
    bounds the rounding error of ``p`` up to a factor of order machine
    epsilon.  ``fixed`` holds already known roots that repel the iterates
    (implicit deflation); they are never moved.

    Raises NonConvergence, with the best iterate in ``details['best']``,
    when some residual is still above ``tol * scale`` after ``maxiter``
    sweeps.
    """
    z = np.array(init, dtype=complex)
    fixed = None if fixed is None or len(fixed) == 0 else np.asarray(fixed, dtype=complex)
    n = z.size
    if n == 0:
        return z
    done_tol = min(8.0 * EPS * max(1.0, np.sqrt(n)), tol / 8)
    active = np.ones(n, dtype=bool)
    best = np.full(n, np.inf)
    stall = np.zeros(n, dtype=int)
    settled = np.zeros(n, dtype=bool)
    for _ in range(maxiter):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        p, dp, s = evaluate(z[idx])
        rel = np.abs(p) / np.where(s > 0, s, 1.0)
        good = rel <= done_tol
        # roots sitting in a cluster stop improving well above the noise floor
        improved = rel < 0.5 * best[idx]
        best[idx] = np.minimum(best[idx], rel)
        stall[idx] = np.where(improved, 0, stall[idx] + 1)
        good |= (stall[idx] >= 8) & (rel <= tol)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = p / dp
            rep = _repulsion(z, idx, fixed)
            w = ratio / (1.0 - ratio * rep)
        bad = ~np.isfinite(w)
        if bad.any():
            # derivative vanished; nudge instead of stepping
            ang = 2 * np.pi * np.arange(bad.sum()) * 0.6180339887
            w[bad] = 1e-3 * (1.0 + np.abs(z[idx][bad])) * np.exp(1j * ang)
        small = np.abs(w) <= 2.0 * EPS * (1.0 + np.abs(z[idx]))
        step = ~good
        z[idx[step]] -= w[step]
        active[idx[good | small]] = False
        settled[idx[small & ~good]] = True
    p, dp, s = evaluate(z)
    # a root whose step fell to rounding size is as accurate as the
    # arithmetic allows even if its residual is not (tiny roots near 0)
    if np.any(~np.isfinite(p)) or np.any((np.abs(p) > tol * s) & ~settled):
        worst = float(np.max(np.abs(p) / np.where(s > 0, s, 1.0)))
        raise NonConvergence(
            f"Aberth iteration did not reach relative residual {tol:g} (worst {worst:.3g})",
            best=z,
        )
    if polish:
        z = newton_polish(evaluate, z, polish)
    return z


def newton_polish(evaluate: Evaluator, z, steps: int = 2) -> np.ndarray:
    """Plain Newton steps, each accepted only where the residual does not grow."""
    z = np.array(z, dtype=complex)
    p, dp, _ = evaluate(z)
    for _ in range(steps):
        with np.errstate(divide="ignore", invalid="ignore"):
            cand = z - p / dp
        ok = np.isfinite(cand)
        if not ok.any():
            break
        pc = np.full_like(p, np.inf)
        dpc = dp.copy()
        pc[ok], dpc[ok], _ = evaluate(cand[ok])
        better = ok & (np.abs(pc) < np.abs(p))
        z = np.where(better, cand, z)
        p = np.where(better, pc, p)
        dp = np.where(better, dpc, dp)
    return z


def newton_steps(evaluate: Evaluator, z) -> np.ndarray:
    """Newton corrections p/p' at the given points (0 where undefined)."""
    p, dp, _ = evaluate(np.asarray(z, dtype=complex))
    with np.errstate(divide="ignore", invalid="ignore"):
        d = p / dp
    d[~np.isfinite(d)] = np.inf
    d[p == 0] = 0.0
    return d


def cluster(z, steps, tol: float = 1e-12, kappa: float = 10.0):
    """Group root approximations belonging to one multiple root.

    Two approximations are linked when their distance is within ``kappa``
    Newton steps (an isolated simple root has a step far below its distance
    to any neighbour, while the iterates around a k-fold root sit at a
    distance comparable to their Newton steps) and within ``tol**(1/4)``.
    A group of size k is kept only if all members lie within ``tol**(1/k)``
    of the centroid (relative to 1+|centroid|); otherwise it is split up.

    Returns a list of ``(centroid, multiplicity, member_indices)``.
    """
    z = np.asarray(z, dtype=complex)
    n = z.size
    if n == 0:
        return []
    steps = np.abs(np.asarray(steps, dtype=complex))
    steps = np.where(np.isfinite(steps), steps, 0.0)
    scale = 1.0 + np.abs(z)
    radius = np.minimum(kappa * steps + 16 * EPS * scale, tol ** 0.25 * scale)
    tree = cKDTree(np.column_stack((z.real, z.imag)))
    pairs = tree.query_pairs(float(radius.max()), output_type="ndarray")
    if pairs.size:
        i, j = pairs[:, 0], pairs[:, 1]
        keep = np.abs(z[i] - z[j]) <= np.maximum(radius[i], radius[j])
        pairs = pairs[keep]
    graph = coo_matrix((np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(n, n)) if len(pairs) else coo_matrix((n, n))
    _, label = connected_components(graph, directed=False)
    order = np.argsort(label, kind="stable")
    bounds = np.flatnonzero(np.diff(label[order])) + 1
    out = []
    for members in np.split(order, bounds):
        k = members.size
        if k == 1:
            out.append((complex(z[members[0]]), 1, members))
            continue
        c = z[members].mean()
        if np.max(np.abs(z[members] - c)) > tol ** (1.0 / k) * (1.0 + abs(c)):
            out.extend((complex(z[m]), 1, np.array([m])) for m in members)
        else:
            out.append((complex(c), int(k), members))
    out.sort(key=lambda t: int(t[2].min()))
    return out


def initial_guesses(p: CPoly) -> np.ndarray:
    """Starting points on circles read off the Newton polygon of |a_k|."""
    n = p.degree
    a = np.abs(p.coeffs)
    k = np.flatnonzero(a > 0)
    la = np.log(a[k])
    # upper convex hull of (k, log|a_k|)
    hull: list[int] = []
    for i in range(k.size):
        while len(hull) >= 2:
            i0, i1 = hull[-2], hull[-1]
            cross = (k[i1] - k[i0]) * (la[i] - la[i0]) - (la[i1] - la[i0]) * (k[i] - k[i0])
            if cross >= 0:
                hull.pop()
            else:
                break
        hull.append(i)
    z = []
    sigma = 0.7
    for e, (i0, i1) in enumerate(zip(hull[:-1], hull[1:])):
        m = int(k[i1] - k[i0])
        r = np.exp((la[i0] - la[i1]) / m)
        ang = 2 * np.pi * np.arange(m) / m + 2 * np.pi * e / n + sigma
        z.append(r * np.exp(1j * ang))
    z = np.concatenate(z) if z else np.zeros(0, complex)
    return z[:n]


def roots(p: CPoly, tol: float = 1e-12, maxiter: int = 500):
    """All roots of ``p`` as ``(root, multiplicity)`` pairs.

    Multiplicities add up to the degree.  Exact zero roots (vanishing low
    order coefficients) are split off first.
    """
    if not isinstance(p, CPoly):
        p = CPoly(p)
    if not np.all(np.isfinite(p.coeffs)):
        raise DegenerateInput("non-finite coefficient")
    if p.degree < 1:
        raise DegenerateInput("polynomial of degree 0 has no roots")
    if not tol > 0:
        raise DegenerateInput("tolerance must be positive")
    nz = int(np.flatnonzero(p.coeffs)[0])
    q = CPoly(p.coeffs[nz:]) if nz else p
    out = [(0j, nz)] if nz else []
    if q.degree == 0:
        return out
    if q.degree == 1:
        return out + [(complex(-q.coeffs[0] / q.coeffs[1]), 1)]
    z = aberth(q.evaluate, initial_guesses(q), tol=tol, maxiter=maxiter)
    for c, k, _ in cluster(z, newton_steps(q.evaluate, z), tol):
        out.append((_refine_multiple(q, c, k) if k > 1 else c, k))
    return out


def _refine_multiple(p: CPoly, c: complex, k: int, steps: int = 8) -> complex:
    """A k-fold root is a simple root of p^(k-1); Newton there from the centroid."""
    g = p
    for _ in range(k - 1):
        g = g.deriv()
    dg = g.deriv()
    r = c
    for _ in range(steps):
        v, dv = complex(g(r)), complex(dg(r))
        if dv == 0:
            break
        t = r - v / dv
        if not abs(t - r) <= 2 * abs(r - c) + 1e-3 * (1 + abs(c)):
            break  # ran off, keep what we have
        done = abs(t - r) <= 4 * EPS * (1 + abs(t))
        r = t
        if done:
            break
    return r


def roots_flat(p: CPoly, tol: float = 1e-12) -> np.ndarray:
    """Roots repeated according to multiplicity, as an array."""
    return np.array([r for r, k in roots(p, tol) for _ in range(k)], dtype=complex)


def product_evaluator(a) -> Evaluator:
    """Evaluator for prod (w - a_i) kept in product form.

    Values are rescaled by the product of all factors except the nearest
    one, which leaves p/p' intact and makes the residual test read
    ``min_i |w - a_i| <= tol (1 + |w|)``.
    """
    a = np.asarray(a, dtype=complex)

    def evaluate(w):
        w = np.asarray(w, dtype=complex)
        diff = w[:, None] - a[None, :]
        near = np.argmin(np.abs(diff), axis=1)
        d0 = diff[np.arange(w.size), near]
        with np.errstate(divide="ignore", invalid="ignore"):
            phase = np.exp(1j * (np.angle(diff).sum(axis=1) - np.angle(d0)))
            s = (1.0 / diff).sum(axis=1)
            val = d0 * phase
            dp = np.where(d0 == 0, phase, val * s)
        return val, dp, 1.0 + np.abs(w)

    return evaluate


# ---------------------------------------------------------------------------
# symbolic iteration


def compose_iterate(p_num: CPoly, p_den: CPoly, n: int) -> tuple[CPoly, CPoly]:
    """Numerator and denominator of the n-th iterate of p_num/p_den.

    Composition is done on the homogeneous lift, so both returned
    polynomials have homogeneous degree d**n (the affine degree of one of
    them may be lower when infinity is special).
    """
    p_num, p_den = _as_cpoly(p_num), _as_cpoly(p_den)
    if p_den.is_zero():
        raise DegenerateInput("denominator is identically zero")
    if n < 1:
        raise DegenerateInput("iterate index must be positive")
    d = max(p_num.degree, p_den.degree)
    if d < 1:
        raise DegenerateInput("constant map")
    if d ** n > MAX_SYMBOLIC_DEGREE:
        raise Overflow(f"degree {d}**{n} exceeds the symbolic cap {MAX_SYMBOLIC_DEGREE}; iterate pointwise")
    a = np.zeros(d + 1, complex)
    b = np.zeros(d + 1, complex)
    a[: p_num.coeffs.size] = p_num.coeffs
    b[: p_den.coeffs.size] = p_den.coeffs
    X, Y = np.array([0, 1], complex), np.array([1], complex)  # (z, 1) as polys in z
    deg = 1
    for _ in range(n):
        # X_new = sum a_i X^i Y^(d-i), both padded to degree deg*d
        powX = [np.array([1], complex)]
        powY = [np.array([1], complex)]
        for _ in range(d):
            powX.append(np.convolve(powX[-1], X))
            powY.append(np.convolve(powY[-1], Y))
        nx = np.zeros(deg * d + 1, complex)
        ny = np.zeros(deg * d + 1, complex)
        for i in range(d + 1):
            term = np.convolve(powX[i], powY[d - i])
            nx[: term.size] += a[i] * term
            ny[: term.size] += b[i] * term
        X, Y, deg = nx, ny, deg * d
        m = max(np.max(np.abs(X)), np.max(np.abs(Y)))
        if not np.isfinite(m) or m > 1e300:
            raise Overflow("coefficient magnitude left the double precision range")
    return CPoly(X), CPoly(Y)
