"""Sobolev norms on SL2(Z/25) and the explicit constants.

Run: python demos/sobolev_tour.py
"""
import numpy as np

from padiclab import sobolev

G = sobolev.FiniteQuotient(5, 2)
rng = np.random.default_rng(1)
f, f2 = G.random_function(rng), G.random_function(rng)

pieces = [sobolev.pr_project(f, m) for m in range(G.n + 1)]
print("||pr[m] f||_2:", [round(x.l2(), 4) for x in pieces])
print("S_5(f) =", round(sobolev.sobolev_norm(f, 5), 4), " ||f||_inf =", round(f.sup(), 4))

c = sobolev.derived_constants(G, 5)
print(f"C1={c.C1:.4f} C3={c.C3:.4f} C4={c.C4:.4f}")

g = int(G.level_elements(1)[7])
rep = sobolev.verify_properties(f, f2, g, 5, 1)
for name, row in zip(("S1", "S2", "S3", "S4"), (rep.s1, rep.s2, rep.s3, rep.s4)):
    print(f"{name}: lhs={row[0]:.4f} rhs={row[1]:.4f} ok={row[2]}")
