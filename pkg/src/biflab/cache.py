"""Content-addressed on-disk cache for periodic-point computations.

Entries are JSON files named by the SHA-256 of (format version, kind, map
coefficients, period, tolerance).  Floats are stored with repr, so a hit
gives back bit-identical numbers.  Unreadable entries are evicted.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
from pathlib import Path

import numpy as np

from . import ratmap
from .ratmap import Cycle, CycleSpectrum, FixedPoint, RationalMap

CACHE_VERSION = 1
ENV_VAR = "BIFLAB_CACHE"

log = logging.getLogger(__name__)


def _c(z) -> list:
    return [float(np.real(z)), float(np.imag(z))]


def _z(pair) -> complex:
    return complex(pair[0], pair[1])


def map_payload(f: RationalMap) -> dict:
    return {"num": [_c(v) for v in f.num.coeffs], "den": [_c(v) for v in f.den.coeffs]}


def resolve_dir(flag: str | None) -> Path | None:
    """BIFLAB_CACHE beats the --cache flag."""
    d = os.environ.get(ENV_VAR) or flag
    return Path(d) if d else None


class Cache:
    def __init__(self, root, version: int = CACHE_VERSION):
        self.root = Path(root)
        self.version = version
        self.hits = 0
        self.misses = 0
        self.evicted = 0

    def key(self, kind: str, payload: dict) -> str:
        blob = json.dumps({"v": self.version, "kind": kind, **payload}, sort_keys=True)
        return hashlib.sha256(blob.encode()).hexdigest()

    def _path(self, key: str) -> Path:
        return self.root / key[:2] / f"{key}.json"

    def load(self, kind: str, payload: dict):
        path = self._path(self.key(kind, payload))
        if not path.exists():
            self.misses += 1
            return None
        try:
            entry = json.loads(path.read_text())
            if entry.get("version") != self.version or entry.get("kind") != kind:
                self.misses += 1
                return None
            self.hits += 1
            return entry["data"]
        except (OSError, ValueError, KeyError):
            log.warning("evicting corrupt cache entry %s", path)
            path.unlink(missing_ok=True)
            self.evicted += 1
            self.misses += 1
            return None

    def store(self, kind: str, payload: dict, data) -> Path:
        path = self._path(self.key(kind, payload))
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_suffix(".tmp")
        tmp.write_text(json.dumps({"version": self.version, "kind": kind, "data": data}, sort_keys=True))
        os.replace(tmp, path)
        return path


def _spectrum_payload(f, n, tol):
    return {"map": map_payload(f), "n": int(n), "tol": float(tol)}


def exact_cycles(f: RationalMap, n: int, tol: float = 1e-12, cache: Cache | None = None) -> CycleSpectrum:
    if cache is None:
        return ratmap.exact_cycles(f, n, tol)
    payload = _spectrum_payload(f, n, tol)
    data = cache.load("spectrum", payload)
    if data is not None:
        return CycleSpectrum(
            data["period"],
            tuple(Cycle(tuple(_z(p) for p in c["points"]), _z(c["multiplier"])) for c in data["cycles"]),
        )
    spec = ratmap.exact_cycles(f, n, tol)
    cache.store(
        "spectrum",
        payload,
        {
            "period": spec.period,
            "cycles": [{"points": [_c(p) for p in c.points], "multiplier": _c(c.multiplier)} for c in spec.cycles],
        },
    )
    return spec


def periodic_points(f: RationalMap, n: int, tol: float = 1e-12, cache: Cache | None = None) -> list:
    if cache is None:
        return ratmap.periodic_points(f, n, tol)
    payload = _spectrum_payload(f, n, tol)
    data = cache.load("periodic", payload)
    if data is not None:
        return [FixedPoint(_z(p), _z(w), int(k)) for p, w, k in data]
    pts = ratmap.periodic_points(f, n, tol)
    cache.store("periodic", payload, [[_c(p.point), _c(p.multiplier), p.multiplicity] for p in pts])
    return pts
