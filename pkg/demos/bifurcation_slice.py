"""The bifurcation measure on the line of quadratic polynomials.

Takes dd^c of L(c) on a coarse grid, compares the approximants L_n0 by the
L1 gap of their measures, and writes the density as a PGM image.
"""

import sys

import numpy as np

from biflab import currents, mandelbrot
from biflab.cli import write_ppm
from biflab.moduli2 import AffineLine

line = AffineLine.polynomial()
grid = currents.ComplexGrid(complex(-2.5, -1.5), 0.02, 175, 150)
field = currents.field_eval(line, 4, "L", grid)
ddc = currents.discrete_ddc(field)
print(f"total mass of dd^c L: {ddc.mass:.4f}")

for n in (4, 6, 8):
    rep = currents.equidist_gap(line, n, grid, reference=field)
    print(f"n={n:2d}  L1 gap {rep.l1:.4f}")

# heaviest atoms against the nearest center of low period
m = ddc.measure
top = np.argsort(m.weights)[::-1][:5]
centers = np.concatenate([mandelbrot.center_poly(k).centers for k in range(1, 9)])
for i in top:
    z = m.locations[i]
    print(f"atom {z.real:+.3f}{z.imag:+.3f}i weight {m.weights[i]:.2e}, nearest center at {np.abs(centers - z).min():.3f}")

out = sys.argv[1] if len(sys.argv) > 1 else "bifurcation.pgm"
img = np.zeros(grid.shape)
ix = np.rint((m.locations.real - grid.origin.real) / grid.h).astype(int)
iy = np.rint((m.locations.imag - grid.origin.imag) / grid.h).astype(int)
img[iy, ix] = np.sqrt(m.weights)
write_ppm(out, img[::-1])
print("wrote", out)
