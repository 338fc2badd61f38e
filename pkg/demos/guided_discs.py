"""Holomorphic discs through centers in the moduli space.

Each disc keeps one fixed point of multiplier t while a critical cycle
stays superattracting. Discs through different centers never meet.
"""

import numpy as np

from biflab import mandelbrot, motion
from biflab.moduli2 import ModuliPoint

q3 = mandelbrot.center_poly(3).centers
centers = {
    "basilica": (ModuliPoint(2, -4), 2),
    "airplane": (ModuliPoint.from_quadratic(q3[np.argmin(np.abs(q3.imag))].real), 3),
    "rabbit": (ModuliPoint.from_quadratic(q3[np.argmax(q3.imag)]), 3),
    "co-rabbit": (ModuliPoint.from_quadratic(q3[np.argmin(q3.imag)]), 3),
}

discs = []
for name, (lam, m) in centers.items():
    d = motion.trace_disc(lam, 1, m, ray_angle=0.0, r_max=0.8, steps=32)
    discs.append(d)
    end = d.point(len(d) - 1)
    print(f"{name:>9}: {len(d)} samples, max residual {d.residuals.max():.1e}, "
          f"lambda(0.8) = ({end.l1:.4f}, {end.l2:.4f})")

dist, (i, j, t) = motion.disjointness(discs, 32)
names = list(centers)
print(f"closest pair: {names[i]} / {names[j]} at t={t.real:.3f}, distance {dist:.4f}")
