"""Atomic measures on the plane and their logarithmic potentials."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import AtomCollision


@dataclass(frozen=True)
class DiscreteMeasure:
    locations: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        loc = np.asarray(self.locations, dtype=complex).ravel()
        w = np.asarray(self.weights, dtype=float).ravel()
        if loc.shape != w.shape:
            raise ValueError("locations and weights differ in length")
        if np.any(w <= 0):
            raise ValueError("atom weights must be positive")
        object.__setattr__(self, "locations", loc)
        object.__setattr__(self, "weights", w)

    @property
    def total(self) -> float:
        return float(np.sum(self.weights))

    def __len__(self) -> int:
        return self.locations.size

    def mass_in(self, region) -> float:
        """Mass inside the closed box (xmin, xmax, ymin, ymax)."""
        return float(np.sum(self.weights[_in_box(self.locations, region)]))

    @classmethod
    def uniform(cls, locations, total: float = 1.0) -> "DiscreteMeasure":
        loc = np.asarray(locations, dtype=complex).ravel()
        return cls(loc, np.full(loc.size, total / loc.size))


def _in_box(z, region):
    x0, x1, y0, y1 = region
    return (z.real >= x0) & (z.real <= x1) & (z.imag >= y0) & (z.imag <= y1)


def potential(m: DiscreteMeasure, z) -> float:
    """sum_i w_i ln|z - a_i|."""
    z = complex(z)
    dist = np.abs(z - m.locations)
    if dist.size and dist.min() <= 1e-12:
        raise AtomCollision("evaluation point sits on an atom", point=z)
    return float(np.dot(m.weights, np.log(dist)))
