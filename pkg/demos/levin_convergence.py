"""Roots of P_n(c) = p_c^n(0) equidistribute to harmonic measure on M.

The potential of their uniform measure is compared with the Green function
of M on a circle outside the set.
"""

import numpy as np

from biflab import mandelbrot

for radius in (2.2, 3.0):
    pts = radius * np.exp(2j * np.pi * np.arange(16) / 16)
    gaps = [mandelbrot.levin_gap(n, pts) for n in range(2, 13, 2)]
    print(f"|c|={radius}: " + "  ".join(f"n={n}:{g:.1e}" for n, g in zip(range(2, 13, 2), gaps)))
