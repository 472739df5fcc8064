"""Projected non-concentration for three kinds of sets, and the shear that repairs a bad one.

Run: python demos/projection_tour.py
"""
import numpy as np

from padiclab import projection
from padiclab.fractal import PointSet, non_concentration_profile
from padiclab.suites import random_fractal_set

p, m, alpha, eps = 5, 4, 0.8, 0.05

sets = {
    "w12-axis": PointSet.from_points(p, m, [(0, t, 0) for t in range(p**m)]),
    "w21-axis": PointSet.from_points(p, m, [(0, 0, t) for t in range(p**m)]),
    "random": random_fractal_set(p, m, alpha, np.random.default_rng(0)),
}
for name, E in sets.items():
    prof = non_concentration_profile(E, m, 0)
    rep = projection.projection_theorem_scan(E, m, 0, alpha, eps, r_depth=1)
    print(f"{name:9s} #E={len(E):4d} fitted alpha={prof.alpha:.3f} "
          f"exceptional r={rep.exceptional} mass={rep.exceptional_mass}")

# On the w21 axis xi_r vanishes to second order at r = 0; a shear moves mass into w12.
E = PointSet.from_points(p, 6, [(0, 0, t) for t in range(1, 200) if t % p])
res = projection.shear_select(E)
print(f"shear r0={res.r0} ({res.case}) keeps {len(res.Ehat)}/{len(E)} points")

# The quadratic sublevel bound on a single polynomial.
print("measure of |t^2|_5 <= 5^-2:", projection.quad_sublevel_measure(1, 0, 0, -2, p))
