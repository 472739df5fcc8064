"""Walk through the contraction integral and the step size m_alpha.

Run: python demos/contraction_tour.py
"""
from padiclab import margulis

p, alpha = 5, 0.5

# The law of log_p ||a_1 u_r w|| for w on the w21 axis, as exact rationals.
dist = margulis.norm_distribution((0, 0, 1), 1, p)
print("law of the norm exponent for w = (0, 0, 1):", {e: str(m) for e, m in dist.items()})
print("integral at alpha = 0.5:", margulis.contraction_integral((0, 0, 1), 1, alpha, p))

# Measure C2 on the depth-2 direction grid, then pick the step size.
dirs = margulis.direction_classes(p, 2)
c2 = margulis.measure_c2(p, alpha, depth=2, directions=dirs)
m = margulis.compute_m_alpha(alpha, c2, p)
print(f"{len(dirs)} direction classes, C2 = {c2:.4f}, m_alpha = {m}")

# Every direction now contracts by at least 1/p on average.
worst = max(margulis.contraction_integral(w, m, alpha, p) * p ** (alpha * margulis.norm_exponent(w, p))
            for w in dirs)
print(f"largest ratio to ||w||^-alpha: {worst:.3e} (bound {1 / p})")

# The same contraction drives the Margulis recursion over several steps.
cfg = margulis.TransverseConfig([(1, 0, 0), (0, 5, 1), (25, 3, 7)], alpha)
for ell in (1, 2, 3):
    rep = margulis.margulis_recursion_check(cfg, margulis.WalkMeasure(p, m), ell, m_alpha=m)
    print(f"ell={ell}: lhs={rep.lhs:.3e} <= p^-ell f(e) = {rep.bound:.3e}: {rep.ok}")
