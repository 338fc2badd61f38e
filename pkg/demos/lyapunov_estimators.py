"""Three ways to get the Lyapunov exponent of z^2 + c, side by side.

Periodic cycles, the Green function at the critical point, and Monte-Carlo
backward orbits should agree; outside M the exponent climbs above ln 2.
"""

import math

from biflab import lyapunov
from biflab.ratmap import RationalMap

CASES = {"z^2": 0, "basilica": -1, "rabbit": -0.1226 + 0.7449j, "Chebyshev": -2, "escaping": 1.0}

print(f"{'map':>10} {'cycles n=12':>12} {'green':>10} {'Monte-Carlo':>18}")
for name, c in CASES.items():
    f = RationalMap.quadratic(c)
    cyc = lyapunov.lyap_cycles(f, 12).value
    grn = lyapunov.lyap_green_quadratic_poly(c).value
    mc = lyapunov.lyap_mc(f, 20_000, 30, seed=0)
    print(f"{name:>10} {cyc:12.6f} {grn:10.6f} {mc.value:10.6f} +- {mc.error:.4f}")
print(f"{'ln 2':>10} {math.log(2):12.6f}")
