"""Command line front end.

    biflab lyap --map z2 --method cycles --n 10
    biflab counts --nmax 6
    biflab percurve --n 3 --w 0 --eta 0
    biflab grid-bif --n 6 --grid -2.5,-1.5,0.01,350,300 --out run1

Every run writes a JSON manifest (inputs, versions, timings, warnings) and
CSV data files into ``--out``.  Settings come from built-in defaults, then an
INI-style ``--config`` file of key=value lines, then the flags.
Exit status: 0 on success, 2 on bad arguments, 3 on numerical failure.
"""

from __future__ import annotations

import argparse
import configparser
import json
import os
import platform
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import scipy

from . import __version__, currents, lyapunov, mandelbrot, moduli2, motion
from . import cache as cache_mod
from .errors import BiflabError
from .moduli2 import AffineLine, ModuliPoint
from .ratmap import RationalMap
from .tables import write_csv

COMMANDS = ("lyap", "spectrum", "percurve", "centers", "grid-bif", "theta-avg", "levin", "trace", "counts")
MAX_NODES = 10**7


class UsageError(Exception):
    pass


@dataclass
class JobConfig:
    command: str
    n: int = 10
    m: int = 2
    w: complex = 0j
    eta: complex = 0j
    grid: tuple = (-2.5, -1.5, 0.01, 350, 300)
    rmax: float = 0.9
    steps: int = 64
    samples: int = 100_000
    depth: int = 30
    seed: int = 0
    threads: int = field(default_factory=lambda: os.cpu_count() or 1)
    out: str = "biflab-out"
    cache: str | None = None
    tol: float = 1e-12
    map: str = "z2"
    method: str = "cycles"
    exact: bool = False
    which: str = "Ln0"
    nmax: int = 6
    K: int = 64
    region: tuple = (-0.95, -0.6, -0.35, 0.35)
    center: str = "2,-4"
    ray: float = 0.0
    radius: float = 3.0
    points: int = 16
    iters: int = 60

    def validate(self):
        if self.command not in COMMANDS:
            raise UsageError(f"unknown command {self.command!r}")
        if not self.tol > 0:
            raise UsageError("tolerance must be positive")
        x0, y0, h, nx, ny = self.grid
        if not h > 0 or nx < 3 or ny < 3:
            raise UsageError("grid needs h > 0 and at least 3 nodes per axis")
        if nx * ny > MAX_NODES:
            raise UsageError(f"grid has {nx * ny} nodes, limit {MAX_NODES}")
        if self.threads < 1:
            raise UsageError("--threads must be positive")


# ---------------------------------------------------------------------------
# parsing


def parse_complex(text) -> complex:
    if isinstance(text, (int, float, complex)):
        return complex(text)
    s = str(text).strip().replace(" ", "").replace("i", "j")
    try:
        return complex(s)
    except ValueError:
        raise UsageError(f"not a complex number: {text!r}") from None


def _tuple(kind, count):
    def conv(text):
        if isinstance(text, tuple):
            return text
        parts = [p for p in str(text).split(",") if p.strip()]
        if len(parts) != count:
            raise UsageError(f"expected {count} comma-separated values, got {text!r}")
        try:
            return tuple(k(p) for k, p in zip(kind, parts))
        except ValueError:
            raise UsageError(f"malformed value list {text!r}") from None

    return conv


CONVERTERS = {
    "n": int,
    "m": int,
    "w": parse_complex,
    "eta": parse_complex,
    "grid": _tuple((float, float, float, int, int), 5),
    "rmax": float,
    "steps": int,
    "samples": int,
    "depth": int,
    "seed": int,
    "threads": int,
    "out": str,
    "cache": str,
    "tol": float,
    "map": str,
    "method": str,
    "exact": lambda v: v if isinstance(v, bool) else str(v).lower() in ("1", "true", "yes", "on"),
    "which": str,
    "nmax": int,
    "K": int,
    "region": _tuple((float,) * 4, 4),
    "center": str,
    "ray": float,
    "radius": float,
    "points": int,
    "iters": int,
}


def read_config_file(path) -> dict:
    """key=value lines, optionally under [section] headers (all merged)."""
    text = Path(path).read_text()
    cp = configparser.ConfigParser(delimiters=("=",), comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        cp.read_string("[__top__]\n" + text)
    except configparser.Error as e:
        raise UsageError(f"bad config file {path}: {e}") from None
    out = {}
    for sec in cp.sections():
        out.update(cp[sec])
    return out


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="biflab", description="Lyapunov exponents and bifurcation currents of quadratic maps.")
    ap.add_argument("--version", action="version", version=f"biflab {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI-style key=value file; flags override it")
    for name in CONVERTERS:
        if name == "exact":
            common.add_argument("--exact", action="store_const", const=True, default=None, help="exact-period cycles only")
            continue
        common.add_argument(f"--{name}", default=None)
    sub = ap.add_subparsers(dest="command", required=True)
    helps = {
        "lyap": "Lyapunov exponent of a map (--method cycles|green|mc)",
        "spectrum": "exact-period cycles and multipliers",
        "percurve": "Per_n(w) meets Per_1(eta)",
        "centers": "centers of hyperbolic components of period n",
        "grid-bif": "L_n^0 / L_n / L field and its dd^c on the polynomial line",
        "theta-avg": "both sides of the theta-average identity on a region",
        "levin": "Levin gap on a circle of test points",
        "trace": "guided disc through a center",
        "counts": "table of N2(n)",
    }
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=helps[name])
    return ap


def resolve(argv) -> JobConfig:
    ap = build_parser()
    ns = ap.parse_args(argv)
    values = {}
    if ns.config:
        values.update(read_config_file(ns.config))
    for name in CONVERTERS:
        v = getattr(ns, name, None)
        if v is not None:
            values[name] = v
    kw = {}
    for k, v in values.items():
        if k not in CONVERTERS:
            raise UsageError(f"unknown setting {k!r}")
        try:
            kw[k] = CONVERTERS[k](v)
        except ValueError:
            raise UsageError(f"bad value for {k}: {v!r}") from None
    cfg = JobConfig(ns.command, **kw)
    cfg.validate()
    return cfg


def parse_map(spec: str) -> RationalMap:
    """z2, z3, zd:<d>, c=<complex> for z^2+c, lambda=<l1>,<l2> for the normal form."""
    s = spec.strip()
    if s in ("z2", "z3"):
        return RationalMap.power(int(s[1]))
    if s.startswith("zd:"):
        return RationalMap.power(int(s[3:]))
    if s.startswith("c="):
        return RationalMap.quadratic(parse_complex(s[2:]))
    if s.startswith("lambda="):
        return moduli2.normal_form(parse_moduli(s[7:]))
    raise UsageError(f"unknown map {spec!r} (use z2, z3, zd:<d>, c=<c>, lambda=<l1>,<l2>)")


def parse_moduli(text: str) -> ModuliPoint:
    parts = text.split(",")
    if len(parts) == 1:
        return ModuliPoint.from_quadratic(parse_complex(parts[0]))
    if len(parts) != 2:
        raise UsageError(f"moduli point must be 'l1,l2' or a single c: {text!r}")
    return ModuliPoint(parse_complex(parts[0]), parse_complex(parts[1]))


# ---------------------------------------------------------------------------
# commands


class Run:
    def __init__(self, cfg: JobConfig):
        self.cfg = cfg
        self.out = Path(cfg.out)
        self.out.mkdir(parents=True, exist_ok=True)
        cdir = cache_mod.resolve_dir(cfg.cache)
        self.cache = cache_mod.Cache(cdir) if cdir else None
        self.warnings: list[str] = []
        self.outputs: list[str] = []
        self.timings: dict[str, float] = {}
        self.results: dict = {}

    def csv(self, name, header, rows):
        self.outputs.append(name)
        write_csv(self.out / name, header, rows)

    def manifest(self):
        cfg = asdict(self.cfg)
        for k, v in cfg.items():
            if isinstance(v, complex):
                cfg[k] = [v.real, v.imag]
        if self.cache is not None:
            self.results["cache"] = {"hits": self.cache.hits, "misses": self.cache.misses, "evicted": self.cache.evicted}
            if self.cache.evicted:
                self.warnings.append(f"{self.cache.evicted} corrupt cache entries evicted")
        doc = {
            "command": self.cfg.command,
            "config": cfg,
            "versions": {
                "biflab": __version__,
                "numpy": np.__version__,
                "scipy": scipy.__version__,
                "python": platform.python_version(),
            },
            "timings": self.timings,
            "warnings": self.warnings,
            "outputs": self.outputs,
            "results": self.results,
        }
        (self.out / "manifest.json").write_text(json.dumps(doc, indent=2, sort_keys=True, default=str) + "\n")


def cmd_lyap(run: Run):
    c = run.cfg
    f = parse_map(c.map)
    if c.method == "cycles":
        est = lyapunov.lyap_cycles(f, c.n, c.exact, c.tol, cache=run.cache)
    elif c.method == "green":
        if f.d != 2 or f.den.degree != 0 or abs(f.num.coeffs[1]) > 0 or abs(f.num.coeffs[2] - 1) > 0:
            raise UsageError("the green method needs a map of the form z^2 + c")
        est = lyapunov.lyap_green_quadratic_poly(f.num.coeffs[0], c.iters)
    elif c.method == "mc":
        est = lyapunov.lyap_mc(f, c.samples, c.depth, c.seed)
    else:
        raise UsageError(f"unknown method {c.method!r}")
    print(f"{est.value:.12f}")
    run.results["value"] = est.value
    run.results["error"] = est.error
    run.csv("lyap.csv", ["order", "value", "error"], [(est.order, est.value, est.error)])


_FLAG = {"attracting": -1, "neutral": 0, "repelling": 1}


def cmd_spectrum(run: Run):
    c = run.cfg
    spec = cache_mod.exact_cycles(parse_map(c.map), c.n, c.tol, run.cache)
    rows = []
    for i, cyc in enumerate(spec.cycles):
        for p in cyc.points:
            rows.append((i, p.real, p.imag, cyc.multiplier.real, cyc.multiplier.imag, _FLAG[cyc.kind]))
    run.csv("spectrum.csv", ["cycle", "point_re", "point_im", "mult_re", "mult_im", "kind"], rows)
    run.results["cycles"] = spec.count
    print(f"{spec.count} cycles of exact period {c.n}")
    for cyc in spec.cycles:
        print(f"{cyc.multiplier.real:.12g} {cyc.multiplier.imag:+.12g}i  {cyc.kind}")


def cmd_percurve(run: Run):
    c = run.cfg
    pts = moduli2.per_curve_samples(c.n, c.w, c.eta)
    rows = [(p.l1.real, p.l1.imag, p.l2.real, p.l2.imag) for p in pts]
    rows.sort()
    run.csv("percurve.csv", ["l1_re", "l1_im", "l2_re", "l2_im"], rows)
    for r in rows:
        print(",".join(f"{v:.12g}" for v in r))
    run.results["count"] = len(rows)


def cmd_centers(run: Run):
    c = run.cfg
    sets = [mandelbrot.center_poly(c.n)]
    mandelbrot.export_centers(run.out / "centers.csv", sets)
    run.outputs.append("centers.csv")
    run.results["count"] = sets[0].count
    print(f"{sets[0].count} centers of period {c.n}")


def _grid(cfg: JobConfig) -> currents.ComplexGrid:
    x0, y0, h, nx, ny = cfg.grid
    return currents.ComplexGrid(complex(x0, y0), h, nx, ny)


def write_ppm(path, img: np.ndarray):
    """8-bit grayscale P5 image, linear from min (black) to max (white); row 0 at the top."""
    lo, hi = float(np.min(img)), float(np.max(img))
    scale = 255.0 / (hi - lo) if hi > lo else 0.0
    px = np.round((img - lo) * scale).astype(np.uint8)
    with open(path, "wb") as fh:
        fh.write(f"P5\n{img.shape[1]} {img.shape[0]}\n255\n".encode())
        fh.write(px.tobytes())


def cmd_grid_bif(run: Run):
    c = run.cfg
    grid = _grid(c)
    line = AffineLine.polynomial()
    fld = currents.field_eval(line, c.n, c.which, grid, threads=c.threads)
    fld.to_csv(run.out / "field.csv")
    run.outputs.append("field.csv")
    masked = int(fld.mask.sum())
    if masked:
        run.warnings.append(f"{masked} masked nodes")
    ddc = currents.discrete_ddc(fld)
    run.warnings.extend(ddc.warnings)
    rows = [(z.real, z.imag, w) for z, w in zip(ddc.measure.locations, ddc.measure.weights)]
    run.csv("ddc.csv", ["re", "im", "weight"], rows)
    if ddc.clamped is not None:
        rows = [(z.real, z.imag, -w) for z, w in zip(ddc.clamped.locations, ddc.clamped.weights)]
        run.csv("ddc_clamped.csv", ["re", "im", "weight"], rows)
    # full signed mass field for the image
    v = np.where(np.isfinite(fld.values), fld.values, np.nan)
    lap = (v[2:, 1:-1] + v[:-2, 1:-1] + v[1:-1, 2:] + v[1:-1, :-2] - 4 * v[1:-1, 1:-1]) / (2 * np.pi)
    lap = np.nan_to_num(lap, nan=0.0, posinf=0.0, neginf=0.0)
    write_ppm(run.out / "ddc.ppm", lap[::-1])
    run.outputs.append("ddc.ppm")
    run.results.update({"mass": ddc.mass, "masked": masked, "clamped_below_tol": ddc.noisy})
    print(f"dd^c mass {ddc.mass:.6f} on {grid.nx}x{grid.ny} nodes ({masked} masked)")


def cmd_theta_avg(run: Run):
    c = run.cfg
    res = currents.theta_average_mass(AffineLine.polynomial(), c.n, c.K, c.region, _grid(c))
    run.csv("theta_avg.csv", ["ddc_mass", "theta_mass", "quad_error"], [(res[0], res[1], res.quad_error)])
    run.results.update({"ddc_mass": res[0], "theta_mass": res[1], "quad_error": res.quad_error})
    print(f"ddc mass {res[0]:.6f}  theta-average {res[1]:.6f}")


def cmd_levin(run: Run):
    c = run.cfg
    pts = c.radius * np.exp(2j * np.pi * np.arange(c.points) / c.points)
    gap = mandelbrot.levin_gap(c.n, pts)
    run.csv("levin.csv", ["n", "gap"], [(c.n, gap)])
    mandelbrot.export_measure(run.out / "measure.csv", mandelbrot.levin_measure(c.n))
    run.outputs.append("measure.csv")
    run.results["gap"] = gap
    print(f"{gap:.6e}")


def cmd_trace(run: Run):
    c = run.cfg
    disc = motion.trace_disc(parse_moduli(c.center), c.n, c.m, c.ray, c.rmax, c.steps)
    disc.to_csv(run.out / "disc.csv")
    run.outputs.append("disc.csv")
    if disc.halvings:
        run.warnings.append(f"{disc.halvings} step halvings")
    run.results.update({"samples": len(disc), "max_residual": float(disc.residuals.max())})
    print(f"{len(disc)} samples, max residual {disc.residuals.max():.3e}")


def cmd_counts(run: Run):
    t = moduli2.count_table(run.cfg.nmax)
    rows = [(k, int(t.nu2[k]), int(t.N2[k])) for k in range(1, run.cfg.nmax + 1)]
    run.csv("counts.csv", ["n", "nu2", "N2"], rows)
    print(",".join(str(r[2]) for r in rows))


HANDLERS = {
    "lyap": cmd_lyap,
    "spectrum": cmd_spectrum,
    "percurve": cmd_percurve,
    "centers": cmd_centers,
    "grid-bif": cmd_grid_bif,
    "theta-avg": cmd_theta_avg,
    "levin": cmd_levin,
    "trace": cmd_trace,
    "counts": cmd_counts,
}


def run(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        cfg = resolve(argv)
        job = Run(cfg)
        t0 = time.perf_counter()
        HANDLERS[cfg.command](job)
        job.timings["total_s"] = time.perf_counter() - t0
        job.manifest()
    except SystemExit as e:  # argparse
        return int(e.code) if isinstance(e.code, int) else 2
    except (UsageError, ValueError) as e:
        print(f"biflab: error: {e}", file=sys.stderr)
        return 2
    except BiflabError as e:
        print(f"biflab: {type(e).__name__}: {e}", file=sys.stderr)
        return 3
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
