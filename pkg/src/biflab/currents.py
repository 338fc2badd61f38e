"""Lyapunov fields on parameter slices and their discrete dd^c.

A slice is an affine complex line in the moduli space (``AffineLine``); a
``ComplexGrid`` samples its parameter.  On the line of quadratic
polynomials the fields have closed forms in the critical orbit, which makes
full-size grids cheap; elsewhere every node goes through the cycle machinery.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import lyapunov, mandelbrot, moduli2, ratmap
from .errors import BiflabError, TooManyMasked
from .measure import DiscreteMeasure, potential  # noqa: F401  (re-exported)
from .moduli2 import AffineLine

LN2 = math.log(2.0)
N_REF = 12
WHICH = ("L", "Ln0", "Ln")


@dataclass(frozen=True)
class ComplexGrid:
    origin: complex
    h: float
    nx: int
    ny: int

    def __post_init__(self):
        object.__setattr__(self, "origin", complex(self.origin))
        if not self.h > 0:
            raise ValueError("grid spacing must be positive")
        if self.nx < 3 or self.ny < 3:
            raise ValueError("grid needs at least 3 nodes per axis")

    @classmethod
    def from_box(cls, x0, x1, y0, y1, h) -> "ComplexGrid":
        return cls(complex(x0, y0), h, int(round((x1 - x0) / h)), int(round((y1 - y0) / h)))

    def nodes(self) -> np.ndarray:
        """Node coordinates, shape (ny, nx); row j has imaginary part y0 + j h."""
        x = self.origin.real + self.h * np.arange(self.nx)
        y = self.origin.imag + self.h * np.arange(self.ny)
        return x[None, :] + 1j * y[:, None]

    @property
    def shape(self):
        return (self.ny, self.nx)


@dataclass(frozen=True)
class ScalarField:
    grid: ComplexGrid
    values: np.ndarray  # shape (ny, nx); -inf where masked
    failed: int = 0  # nodes masked because the evaluation raised

    @property
    def mask(self) -> np.ndarray:
        return ~np.isfinite(self.values)

    def to_csv(self, path) -> str:
        g = self.grid
        with open(path, "w", newline="\n") as fh:
            fh.write("# origin_re origin_im h nx ny\n")
            fh.write(f"# {g.origin.real!r} {g.origin.imag!r} {g.h!r} {g.nx} {g.ny}\n")
            for row in self.values:
                fh.write(",".join("-inf" if not np.isfinite(v) else repr(float(v)) for v in row) + "\n")
        return os.fspath(path)

    @classmethod
    def from_csv(cls, path) -> "ScalarField":
        with open(path) as fh:
            lines = [ln.strip() for ln in fh if ln.strip()]
        meta = lines[1].lstrip("#").split()
        grid = ComplexGrid(complex(float(meta[0]), float(meta[1])), float(meta[2]), int(meta[3]), int(meta[4]))
        vals = np.array([[float(v) for v in ln.split(",")] for ln in lines[2:]])
        return cls(grid, vals)


# ---------------------------------------------------------------------------
# field evaluation


def _nu_prime(n: int) -> int:
    mu = ratmap.mobius_mu(n)
    return int(sum(mu[n // k] * 2**k for k in ratmap.divisors(n)))


def polynomial_line_field(c, n: int, which: str, n_ref: int = N_REF) -> np.ndarray:
    """Closed forms on the line z^2 + c (c is the slice parameter).

    The product of (f^n)' over the finite fixed points of f^n is
    2^(n 2^n) P_n(c)^n, and p_n(c, 0) = 2^nu'(n) Q_n(c) with
    nu'(n) = sum_{k|n} mu(n/k) 2^k.  Attracting cycles are corrected for
    separately; they are found from the critical orbit.
    """
    c = np.asarray(c, dtype=complex)
    with np.errstate(divide="ignore", invalid="ignore"):
        if which == "L":
            logs = mandelbrot.critical_logs(c, n_ref)
            per, w = mandelbrot.attracting_cycle(c, n_ref)
            corr = np.where((per > 0) & (n_ref % np.maximum(per, 1) == 0), np.log(np.abs(w)), 0.0)
            out = (2**n_ref * LN2 + logs[n_ref - 1] - corr) / 2**n_ref
        elif n == 1:
            if which == "Ln0":
                # the fixed point at infinity is superattracting on the whole line
                out = np.full(c.shape, -np.inf)
            else:
                r = np.sqrt(1 - 4 * c)
                out = (np.maximum(0, np.log(np.abs(1 + r))) + np.maximum(0, np.log(np.abs(1 - r)))) / 2
        else:
            logs = mandelbrot.critical_logs(c, n)
            mu = ratmap.mobius_mu(n)
            lq = sum(mu[n // k] * logs[k - 1] for k in ratmap.divisors(n))
            out = (_nu_prime(n) * LN2 + lq) / 2**n
            if which == "Ln":
                per, w = mandelbrot.attracting_cycle(c, n)
                # a sum of log+ terms; clamp the cancellation residue
                out = np.maximum(out - np.where(per == n, np.log(np.abs(w)), 0.0) / 2**n, 0.0)
    out = np.where(np.isnan(out), -np.inf, out)
    return out


def node_value(lam: moduli2.ModuliPoint, n: int, which: str, n_ref: int = N_REF) -> float:
    if which == "L":
        return lyapunov.lyap_cycles(moduli2.normal_form(lam), n_ref).value
    if which == "Ln0":
        return float(lyapunov.family_Ln0(lam, n))
    return lyapunov.family_Ln(lam, n).value


def field_eval(
    line: AffineLine,
    n: int,
    which: str,
    grid: ComplexGrid,
    n_ref: int = N_REF,
    threads: int = 1,
    generic: bool = False,
) -> ScalarField:
    """L, L_n^0 or L_n sampled on the grid; failures and Per_n(0) nodes are -inf."""
    if which not in WHICH:
        raise ValueError(f"which must be one of {WHICH}")
    s = grid.nodes()
    if line.is_polynomial and not generic:
        return ScalarField(grid, polynomial_line_field(s, n, which, n_ref))

    def one(t):
        try:
            return node_value(line(t), n, which, n_ref), 0
        except BiflabError:
            return -math.inf, 1

    flat = s.ravel()
    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            res = list(ex.map(one, flat, chunksize=64))
    else:
        res = [one(t) for t in flat]
    vals = np.array([v for v, _ in res]).reshape(grid.shape)
    return ScalarField(grid, vals, failed=sum(f for _, f in res))


# ---------------------------------------------------------------------------
# discrete dd^c


@dataclass(frozen=True)
class DdcResult:
    measure: DiscreteMeasure  # positive atoms
    clamped: DiscreteMeasure | None  # negative atoms, stored with |weight|
    masked_used: int
    noisy: int  # atoms below -1e-6
    warnings: list = field(default_factory=list)

    @property
    def mass(self) -> float:
        """Signed total: positive atoms minus clamped ones."""
        neg = self.clamped.total if self.clamped is not None else 0.0
        return self.measure.total - neg

    def mass_in(self, region) -> float:
        neg = self.clamped.mass_in(region) if self.clamped is not None else 0.0
        return self.measure.mass_in(region) - neg


def _fill_masked(v: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Replace masked nodes by the mean of their unmasked 4-neighbours, repeatedly."""
    v = np.where(mask, 0.0, v)
    known = ~mask
    for _ in range(max(v.shape)):
        if known.all():
            break
        acc = np.zeros_like(v)
        cnt = np.zeros_like(v)
        for sl_to, sl_from in (
            ((slice(1, None), slice(None)), (slice(None, -1), slice(None))),
            ((slice(None, -1), slice(None)), (slice(1, None), slice(None))),
            ((slice(None), slice(1, None)), (slice(None), slice(None, -1))),
            ((slice(None), slice(None, -1)), (slice(None), slice(1, None))),
        ):
            acc[sl_to] += np.where(known[sl_from], v[sl_from], 0.0)
            cnt[sl_to] += known[sl_from]
        new = ~known & (cnt > 0)
        v = np.where(new, acc / np.maximum(cnt, 1), v)
        known = known | new
    return v


def discrete_ddc(fld: ScalarField, max_masked: float = 0.1) -> DdcResult:
    """Five-point Laplacian times h^2/(2 pi), as atoms at the interior nodes."""
    v = np.asarray(fld.values, dtype=float)
    mask = ~np.isfinite(v)
    interior = mask[1:-1, 1:-1]
    if interior.size == 0:
        raise ValueError("field has no interior nodes")
    if interior.mean() >= max_masked:
        raise TooManyMasked(f"{interior.sum()} of {interior.size} interior nodes masked", masked=int(interior.sum()))
    # stencils that touch a masked node
    touched = np.zeros_like(interior)
    for di, dj in ((0, 0), (1, 0), (-1, 0), (0, 1), (0, -1)):
        touched |= mask[1 + di : mask.shape[0] - 1 + di, 1 + dj : mask.shape[1] - 1 + dj]
    v = _fill_masked(v, mask) if mask.any() else v
    lap = v[2:, 1:-1] + v[:-2, 1:-1] + v[1:-1, 2:] + v[1:-1, :-2] - 4 * v[1:-1, 1:-1]
    w = lap / (2 * np.pi)
    loc = fld.grid.nodes()[1:-1, 1:-1]
    pos = w > 0
    neg = w < 0
    noisy = int(np.sum(w < -1e-6))
    warnings = []
    if noisy:
        warnings.append(f"{noisy} atoms below -1e-6 clamped")
    if touched.any():
        warnings.append(f"{int(touched.sum())} stencils used neighbour-averaged masked nodes")
    return DdcResult(
        DiscreteMeasure(loc[pos], w[pos]),
        DiscreteMeasure(loc[neg], -w[neg]) if neg.any() else None,
        int(touched.sum()),
        noisy,
        warnings,
    )


# ---------------------------------------------------------------------------
# equidistribution diagnostics


@dataclass(frozen=True)
class GapReport:
    n: int
    l1: float
    mass_L: float
    mass_Ln0: float
    masked: int

    def __float__(self):
        return self.l1

    @property
    def mass_gap(self) -> float:
        return abs(self.mass_L - self.mass_Ln0)


def equidist_gap(line: AffineLine, n: int, grid: ComplexGrid, n_ref: int = N_REF, reference=None, **kw) -> GapReport:
    """L^1 distance h^2 sum |L - L_n^0| over nodes where both are finite."""
    ref = reference if reference is not None else field_eval(line, n, "L", grid, n_ref, **kw)
    fn = field_eval(line, n, "Ln0", grid, n_ref, **kw)
    ok = np.isfinite(ref.values) & np.isfinite(fn.values)
    l1 = float(np.sum(np.abs(ref.values[ok] - fn.values[ok])) * grid.h**2)
    try:
        mr, mn = discrete_ddc(ref).mass, discrete_ddc(fn).mass
    except TooManyMasked:
        mr = mn = math.nan
    return GapReport(n, l1, mr, mn, int(np.sum(~ok)))


class ThetaMass(tuple):
    """(ddc mass, theta-averaged slice count); ``quad_error`` compares K with K/2."""

    def __new__(cls, ddc_mass, theta_mass, quad_error):
        obj = super().__new__(cls, (ddc_mass, theta_mass))
        obj.quad_error = quad_error
        return obj

    @property
    def ddc_mass(self):
        return self[0]

    @property
    def theta_mass(self):
        return self[1]


def slice_roots(line: AffineLine, n: int, w: complex) -> np.ndarray:
    """Parameters s with p_n(line(s), w) = 0."""
    N = moduli2.count_table(n)[n]
    return moduli2.line_roots(line, n, w, N).params


def theta_average_mass(line: AffineLine, n: int, K: int, region, grid: ComplexGrid) -> ThetaMass:
    """Both sides of dd^c L_n = (2^-n / 2 pi) int [Per_n(e^{i theta})] d theta, restricted to region."""
    if K < 16:
        raise ValueError("need at least 16 theta samples")
    ddc = discrete_ddc(field_eval(line, n, "Ln", grid)).mass_in(region)
    counts = []
    x0, x1, y0, y1 = region
    for k in range(K):
        s = slice_roots(line, n, np.exp(2j * np.pi * k / K))
        counts.append(np.sum((s.real >= x0) & (s.real <= x1) & (s.imag >= y0) & (s.imag <= y1)))
    counts = np.array(counts, float) / 2**n
    avg = float(counts.mean())
    half = float(counts[::2].mean())
    return ThetaMass(ddc, avg, abs(avg - half))
