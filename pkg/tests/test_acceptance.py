"""Acceptance criteria 1-12, one test each.

Every test prints a ``criterion N: PASS|FAIL`` line with the measured figures,
and the terminal summary repeats the verdicts.  Criteria 5 and 6 are
implemented as stated and are expected to fail; the reasons are recorded in
the decisions log kept next to the repository.
"""
from __future__ import annotations

import math
import time
from fractions import Fraction

import numpy as np
import pytest

from padiclab import fractal, heights, margulis, projection, sl2, sobolev
from padiclab.cli import main as cli_main
from padiclab.errors import SizeConditionError
from padiclab.fractal import PointSet
from padiclab.padic import Qp
from padiclab.suites import adversarial_shear_sets, case_rng, random_fractal_set, random_valuation_set

pytestmark = pytest.mark.acceptance
REL = 1e-9


def verdict(num: int, ok: bool, detail: str) -> None:
    print(f"\ncriterion {num}: {'PASS' if ok else 'FAIL'} {detail}")


@pytest.mark.criterion(1, "contraction at m_alpha")
def test_criterion_01_contraction():
    start = time.perf_counter()
    failures, lines = [], []
    for p in (5, 7):
        dirs = margulis.direction_classes(p, 2)
        for alpha in (0.3, 0.5, 0.7, 0.9):
            c2 = margulis.measure_c2(p, alpha, depth=2, directions=dirs)
            m = margulis.compute_m_alpha(alpha, c2, p)
            bad = margulis.verify_m_alpha(m, alpha, p, dirs)
            failures += bad
            lines.append(f"p={p} alpha={alpha} C2={c2:.4g} m={m} classes={len(dirs)} bad={len(bad)}")
    elapsed = time.perf_counter() - start
    ok = not failures and elapsed < 60
    verdict(1, ok, f"{elapsed:.1f}s; " + "; ".join(lines))
    assert not failures, failures[:3]
    assert elapsed < 60


@pytest.mark.criterion(2, "quadratic sublevel bound, exhaustive mod p^2")
def test_criterion_02_interpolation():
    p = 5
    start = time.perf_counter()
    results = []
    for n in range(-4, 1):
        worst, _ = projection.quad_sublevel_grid(p, 2, n)
        # exact comparison: worst <= p^2 p^(n/2)  <=>  worst^2 <= p^(4+n)
        results.append((n, worst, worst * worst <= Fraction(p) ** (4 + n)))
    elapsed = time.perf_counter() - start
    ok = all(r[2] for r in results) and elapsed < 600
    verdict(2, ok, f"{elapsed:.1f}s; " + "; ".join(f"n={n} worst={w}" for n, w, _ in results))
    assert all(r[2] for r in results), results
    assert elapsed < 600


@pytest.mark.criterion(3, "BCH norm equality")
def test_criterion_03_bch():
    K = Qp(5, 12)
    fails = []
    for i in range(10_000):
        rng = case_rng(3, i)
        w1 = sl2.RVec(*(K.random_integral(rng, 2) for _ in range(3)))
        w2 = sl2.RVec(*(K.random_integral(rng, 2) for _ in range(3)))
        w = sl2.bch_product(w1, w2, check=False)
        if w.valuation_bound() != (w1 - w2).valuation_bound():
            fails.append((w1, w2))
    verdict(3, not fails, f"10000 pairs, {len(fails)} failures")
    assert not fails


@pytest.mark.criterion(4, "Gauss decomposition round trip")
def test_criterion_04_gauss():
    K = Qp(5, 20)
    fails = 0
    for i in range(10_000):
        k = sl2.random_level(K, case_rng(4, i), 1)
        lo, mid, up = sl2.gauss_decompose(k, 1)
        shapes = lo.b.is_exact_zero and mid.b.is_exact_zero and mid.c.is_exact_zero and up.c.is_exact_zero
        if not (lo * mid * up == k and shapes and all(x.in_level(1) for x in (lo, mid, up))):
            fails += 1
    verdict(4, fails == 0, f"10000 elements, {fails} failures")
    assert fails == 0


@pytest.mark.criterion(5, "Q^H subgroup and conjugation containment")
def test_criterion_05_qh_subgroup():
    K = Qp(5, 24)
    closure_fails = 0
    params = [(1, 2, 1), (2, 2, 2), (1, 3, 3)]
    for i in range(1000):
        rng = case_rng(5, i)
        eta, beta, m = params[i % len(params)]
        q1, q2 = sl2.random_qh(K, rng, eta, beta, m), sl2.random_qh(K, rng, eta, beta, m)
        if not (sl2.qh_membership(q1 * q2, eta, beta, m) and sl2.qh_membership(q1.inv(), eta, beta, m)):
            closure_fails += 1
    containment = []
    for i in range(300):
        rng = case_rng(50, i)
        beta, m = 2, 1 + i % 3
        q = sl2.random_qh(K, rng, beta, beta, m)
        k = sl2.random_level(K, rng, beta)
        r = K.random_integral(rng, 0)
        containment.append(sl2.conjugation_containment(q, k, m, r, beta).ok)
    held = sum(containment)
    ok = closure_fails == 0 and held == len(containment)
    verdict(5, ok, f"closure failures {closure_fails}/1000; containment held on {held}/{len(containment)} triples")
    assert closure_fails == 0
    assert held == len(containment), "containment fails for q in Q^H_{beta,m}; see decisions log"


def _admissible_eps(n: int, p: int) -> float:
    """Smallest epsilon (to 1e-6) satisfying the size condition for #F = n."""
    eps = 2 * math.log(4 * math.log(n, p)) / math.log(n) + 1e-6
    assert fractal.size_condition(n, eps, p)
    return eps


@pytest.mark.criterion(6, "Bourgain regularization postcondition")
def test_criterion_06_bourgain():
    p, m, alpha = 5, 6, 0.8
    outcomes = []
    for i in range(100):
        F = random_fractal_set(p, m, alpha, case_rng(6, i))
        assert 1000 <= len(F) <= 10_000
        eps = _admissible_eps(len(F), p)
        tree = fractal.PBallTree(F)
        D = max(1.0, max(fractal.energy_sum(tree, alpha, w) for w in F.points) / len(F) ** (1 + eps))
        try:
            res = fractal.bourgain_regularize(F, alpha, eps, D)
        except SizeConditionError as exc:
            outcomes.append((False, str(exc)))
            continue
        scan = fractal.ball_scan_max_counts(res.F_prime, max(res.scan_max_counts))
        passes = scan == res.scan_max_counts and res.postcondition_ok
        outcomes.append((passes, f"l1={res.l1} C'={res.C_prime:.3g}"))
    good = sum(o[0] for o in outcomes)
    first_bad = next((o[1] for o in outcomes if not o[0]), "")
    verdict(6, good == 100, f"{good}/100 sets regularized; first failure: {first_bad}")
    assert good == 100, first_bad


@pytest.mark.criterion(7, "projection scan exceptional mass")
def test_criterion_07_projection():
    p, m, alpha, eps = 5, 4, 0.8, 0.05
    E12 = PointSet.from_points(p, m, [(0, t, 0) for t in range(p**m)])
    rep12 = projection.projection_theorem_scan(E12, m, 0, alpha, eps, r_depth=2)
    ok12 = rep12.exceptional_mass == 0 and math.isclose(rep12.max_good_constant, rep12.hypothesis_D, rel_tol=REL)
    E21 = PointSet.from_points(p, m, [(0, 0, t) for t in range(p**m)])
    rep21 = projection.projection_theorem_scan(E21, m, 0, alpha, eps, r_depth=1)
    ok21 = rep21.exceptional_fraction == Fraction(1, p)
    masses = []
    for i in range(5):
        E = random_fractal_set(p, 5, alpha, case_rng(7, i))
        masses.append(projection.projection_theorem_scan(E, 5, 0, alpha, eps, r_depth=2).exceptional_mass)
    okr = all(x <= 1 / p * (1 + REL) for x in masses)
    verdict(7, ok12 and ok21 and okr,
            f"w12-axis mass={rep12.exceptional_mass} const={rep12.max_good_constant:.6g} D'={rep12.hypothesis_D:.6g}; "
            f"w21-axis mass={rep21.exceptional_fraction}; random masses={masses}")
    assert ok12 and ok21 and okr


@pytest.mark.criterion(8, "shear selection")
def test_criterion_08_shear():
    p, m = 5, 8
    sets = list(adversarial_shear_sets(p, m).values())
    sets += [random_valuation_set(p, m, 200, case_rng(8, i)) for i in range(100)]
    fails = 0
    for E in sets:
        res = projection.shear_select(E)
        if not (all(projection.shear_condition(w, p) for w in res.Ehat.points) and 4 * len(res.Ehat) >= len(E)):
            fails += 1
    verdict(8, fails == 0, f"{len(sets)} sets, {fails} failures")
    assert fails == 0


@pytest.mark.criterion(9, "Sobolev norm properties on SL2(Z/25)")
def test_criterion_09_sobolev():
    start = time.perf_counter()
    G = sobolev.FiniteQuotient(5, 2)
    d = 5.0
    levels = [G.level_elements(r) for r in range(3)]
    rng = case_rng(9, 0)
    f = G.random_function(rng)
    prs = [sobolev.pr_project(f, m) for m in range(3)]
    recon = float(np.max(np.abs(sum(x.values for x in prs) - f.values)))
    ortho = max(abs(prs[i].inner(prs[j])) for i in range(3) for j in range(3) if i != j)
    fails = []
    for i in range(1000):
        rng = case_rng(9, i + 1)
        r = i % 3
        g = int(levels[r][rng.integers(len(levels[r]))])
        rep = sobolev.verify_properties(G.random_function(rng), G.random_function(rng), g, d, r, raise_on_fail=False)
        if not rep.ok:
            fails.append((i, rep))
    elapsed = time.perf_counter() - start
    ok = recon <= 1e-12 and ortho <= 1e-12 and not fails and elapsed < 300
    verdict(9, ok, f"reconstruction {recon:.2e}, orthogonality {ortho:.2e}, {len(fails)}/1000 failures, {elapsed:.1f}s")
    assert ok


@pytest.mark.criterion(10, "Margulis recursion and energy identity")
def test_criterion_10_margulis():
    p, alpha = 5, 0.5
    c2 = margulis.measure_c2(p, alpha, depth=2)
    m = margulis.compute_m_alpha(alpha, c2, p)
    nu = margulis.WalkMeasure(p, m)
    fails = []
    for c in range(20):
        rng = case_rng(10, c)
        vecs = set()
        while len(vecs) < 20:
            w = tuple(int(p ** int(rng.integers(0, 3)) * rng.integers(-p**4, p**4)) for _ in range(3))
            if any(w):
                vecs.add(w)
        cfg = margulis.TransverseConfig(sorted(vecs), alpha)
        for ell in (1, 2, 3):
            rep = margulis.margulis_recursion_check(cfg, nu, ell, m_alpha=m)
            if not rep.lhs <= float(p) ** (-ell) * rep.f_identity * (1 + REL):
                fails.append((c, ell, rep))
    ident = []
    for i in range(10):
        base = random_fractal_set(p, 4, 0.8, case_rng(100, i))
        # the base point change needs F inside the BCH ball p^2 Z_p^3
        F = PointSet(p, 3, 6, tuple(tuple(p * p * c for c in w) for w in base.points))
        w0 = F.points[int(case_rng(101, i).integers(len(F)))]
        e, model = margulis.energy_vs_margulis(F, w0, alpha)
        ident.append(abs(e - model) <= 1e-12 * max(1.0, abs(e)))
    ok = not fails and all(ident)
    verdict(10, ok, f"m_alpha={m}; recursion failures {len(fails)}/60; identity held {sum(ident)}/10")
    assert ok


@pytest.mark.criterion(11, "product formula, kernel bases, inverse norms")
def test_criterion_11_heights():
    prod_fail = 0
    for i in range(10_000):
        rng = case_rng(11, i)
        x = Fraction(int(rng.integers(1, 10**7)) * (1 if rng.random() < 0.5 else -1), int(rng.integers(1, 10**5)))
        rec = heights.place_norms(heights.SAdicScalar(x, ("inf", 5)))
        # the listed places must account for the whole numerator and denominator
        rebuilt = math.prod((Fraction(q) ** heights.valuation_q(x, q) for q in rec.all_places if q != "inf"),
                            start=Fraction(1))
        if rec.all_product != 1 or rebuilt != abs(x):
            prod_fail += 1
    kern_fail = 0
    for i in range(100):
        rng = case_rng(111, i)
        T = int(rng.integers(2, 10))
        rows, cols = int(rng.integers(1, 4)), int(rng.integers(2, 7))
        A = [[int(rng.integers(-T, T + 1)) for _ in range(cols)] for _ in range(rows)]
        B = heights.integer_kernel_basis(A, T)
        rank = len(heights.independent_rows(A))
        exact = all(sum(a * b for a, b in zip(row, v)) == 0 for row in A for v in B)
        small = all(max(map(abs, v)) <= T ** (3 * cols) for v in B)
        if not (exact and small and len(B) == cols - rank and (not B or heights.is_saturated(B, cols))):
            kern_fail += 1
    inv_fail = 0
    S = ("inf", 5, 7)
    for i in range(10_000):
        rng = case_rng(1111, i)
        y = Fraction(int(rng.integers(1, 10**6)) * (1 if rng.random() < 0.5 else -1))
        y *= Fraction(5) ** int(rng.integers(-6, 7)) * Fraction(7) ** int(rng.integers(-4, 5))
        if not heights.inverse_norm_check(heights.SAdicScalar(y, S)):
            inv_fail += 1
    ok = prod_fail == kern_fail == inv_fail == 0
    verdict(11, ok, f"product formula {prod_fail}/10000, kernel {kern_fail}/100, inverse norm {inv_fail}/10000 failures")
    assert ok


SUITE_ARGS = {
    "contraction": ["--w", "1,2,5", "--w", "0,0,1"],
    "m-alpha": ["--depth", "1", "--alpha", "0.5"],
    "interpolation": ["--depth", "1", "--n=-2,-1"],
    "bch": ["--trials", "50"],
    "gauss": ["--trials", "50"],
    "bourgain": ["--trials", "4", "--depth", "4", "--mode", "diagnose"],
    "projection": ["--depth", "3"],
    "shear": ["--trials", "6", "--size", "60"],
    "sobolev": ["--level", "1", "--trials", "12"],
    "margulis": ["--trials", "2", "--size", "6"],
    "siegel": ["--trials", "20"],
    "heights": ["--trials", "50"],
}


@pytest.mark.criterion(12, "byte-identical reports across thread counts")
def test_criterion_12_determinism(tmp_path):
    differing = []
    for name, extra in SUITE_ARGS.items():
        outs = []
        for threads in (1, 4):
            path = tmp_path / f"{name}-{threads}.json"
            code = cli_main([name, "--seed", "7", "--threads", str(threads), "--out", str(path), *extra])
            assert code in (0, 1)
            outs.append(path.read_bytes())
        if outs[0] != outs[1]:
            differing.append(name)
    verdict(12, not differing, f"{len(SUITE_ARGS)} suites compared, differing: {differing}")
    assert not differing
