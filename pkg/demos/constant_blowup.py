"""Spatially constant data blow up exactly like the ODE y' = y^3.

The pseudospectral solver never sees a nonzero frequency here, so its
blow-up time estimate should land on 1 / (2 c^2).
"""

import numpy as np

from cubicheat import Grid, RealField, SolverConfig, solve

grid = Grid(1, 256)
print(f"{'c':>5} {'T* (solver)':>12} {'1/(2c^2)':>10} {'rel err':>9}")
for c in (0.5, 1.0, 2.0):
    u0 = RealField(grid, np.full(grid.shape, c))
    out = solve(u0, SolverConfig(grid, 2 / c**2, track_p=2.0))
    exact = 1 / (2 * c**2)
    print(f"{c:5.2f} {out.T_star_estimate:12.6f} {exact:10.6f} {abs(out.T_star_estimate / exact - 1):9.2e}")
