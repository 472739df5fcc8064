"""Experiment suites behind the command line.

Every suite is a list of independent cases.  Case ``i`` draws its randomness
from ``Philox(SeedSequence([seed, i]))``, so results do not depend on which
worker ran it or in which order.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction

import numpy as np

from . import fractal, heights, margulis, projection, sl2, sobolev
from .errors import DomainError, InequalityViolation, PrecisionError, SizeConditionError
from .fractal import PointSet
from .padic import Qp, randbelow


def case_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, index])))


def run_cases(fn, n: int, threads: int = 1) -> list:
    """``[fn(0), ..., fn(n-1)]`` evaluated on up to ``threads`` workers, in index order."""
    if threads <= 1 or n <= 1:
        return [fn(i) for i in range(n)]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fn, range(n)))


def _fail(case: dict, exc: Exception) -> dict:
    case["ok"] = False
    case["error"] = f"{type(exc).__name__}: {exc}"
    return case


def _fr(x: Fraction) -> str:
    return heights.format_rational(Fraction(x))


def _scalar(x) -> dict:
    """Exact replayable form of a p-adic scalar."""
    if x.is_exact_zero:
        return {"zero": True}
    return {"valuation": x.valuation, "unit": x.unit, "prec": x.prec}


# -- random generators ----------------------------------------------------

def random_fractal_set(p: int, m: int, alpha: float, rng, d: int = 3) -> PointSet:
    """Random tree set whose mean branching per level is ``p^alpha``.

    Each node has ``floor(p^alpha)`` or ``ceil(p^alpha)`` children chosen at random
    among its ``p^d`` sub-balls, giving ball masses close to ``p^(-alpha k)``.
    """
    target = float(p) ** alpha
    lo = max(1, math.floor(target))
    frac = target - lo
    nodes = [tuple([0] * d)]
    for k in range(m):
        nxt = []
        for node in nodes:
            kids = lo + (1 if rng.random() < frac else 0)
            kids = min(kids, p**d)
            choice = rng.choice(p**d, size=kids, replace=False)
            for c in sorted(int(x) for x in choice):
                digits = [(c // p**i) % p for i in range(d)]
                nxt.append(tuple(node[i] + digits[i] * p**k for i in range(d)))
        nodes = nxt
    return PointSet(p, d, m, tuple(nodes))


def random_valuation_set(p: int, m: int, size: int, rng, max_val: int = 4) -> PointSet:
    """Points of r with coordinates ``p^v u`` for random v in ``[0, max_val]``, distinct mod p^m."""
    q = p**m
    pts = set()
    while len(pts) < size:
        pt = []
        for _ in range(3):
            v = int(rng.integers(0, max_val + 1))
            pt.append((p**v * randbelow(rng, q)) % q)
        pts.add(tuple(pt))
    return PointSet(p, 3, m, tuple(sorted(pts)))


def adversarial_shear_sets(p: int, m: int) -> dict:
    """Sets on which the fixed choices r0 = 0, p^2 or 1 break down."""
    q = p**m
    half = (p - 1) // 2
    w21_axis = [(0, 0, t) for t in range(1, q) if t % p][: 4 * p * p]
    # |w11| = p^-2 and 2 p^2 w11 + p^4 w21 = 0 mod p^5: the p^2 shear cancels
    cancel = [((p * p * half + p**3 * j) % q, 0, (1 + p * j) % q) for j in range(4 * p * p)]
    # |w21| = p^-1 ||w|| exactly, small w12: the boundary of the case split
    boundary = [((1 + p * j) % q, (p**5 * j) % q, (p * (1 + p * j)) % q) for j in range(4 * p * p)]
    return {
        "w21-axis": PointSet.from_points(p, m, w21_axis),
        "p2-cancellation": PointSet.from_points(p, m, cancel),
        "w21-boundary": PointSet.from_points(p, m, boundary),
    }


def _rvec_random(K: Qp, rng, min_val: int) -> sl2.RVec:
    return sl2.RVec(*(K.random_integral(rng, min_val) for _ in range(3)))


# -- suites ---------------------------------------------------------------

def suite_contraction(args) -> dict:
    vectors = args.w or [(0, 0, 1), (0, 1, 0), (1, 0, 0)]
    p = args.p

    def case(i):
        w = vectors[i]
        out = {"index": i, "w": list(w), "lambda_exp": args.lambda_exp}
        try:
            dist = margulis.norm_distribution(w, args.lambda_exp, p)
            out["distribution"] = {str(e): _fr(m) for e, m in dist.items()}
            vals = {}
            for a in args.alpha:
                vals[repr(a)] = margulis.integral_from_distribution(dist, a, p)
            out["lhs"] = vals
            ok = True
            if args.mode == "verify" and args.lambda_exp <= 2:
                for a in args.alpha:
                    brute = margulis.contraction_integral_enumerate(w, args.lambda_exp, a, p, start_depth=args.depth)
                    ok &= abs(brute - vals[repr(a)]) <= 1e-9 * brute
                out["enumeration_agrees"] = ok
            out["ok"] = bool(ok)
        except (DomainError, InequalityViolation) as exc:
            return _fail(out, exc)
        return out

    return {"cases": run_cases(case, len(vectors), args.threads)}


def suite_m_alpha(args) -> dict:
    p = args.p
    dirs = margulis.direction_classes(p, args.depth)
    alphas = list(args.alpha)

    def case(i):
        a = alphas[i]
        c2 = args.c2 if args.c2 is not None else margulis.measure_c2(p, a, depth=args.depth)
        m = margulis.compute_m_alpha(a, c2, p)
        bad = margulis.verify_m_alpha(m, a, p, dirs)
        out = {"index": i, "alpha": a, "c2": c2, "m_alpha": m, "directions": len(dirs), "ok": not bad}
        if bad:
            w, val, bound = bad[0]
            out["counterexample"] = {"w": list(w), "value": val, "bound": bound}
        return out

    return {"cases": run_cases(case, len(alphas), args.threads)}


def suite_interpolation(args) -> dict:
    p = args.p
    if args.a is not None:
        a, b, c = (heights.parse_rational(x) for x in (args.a, args.b or "0", args.c or "0"))
        ns = args.n

        def case(i):
            n = ns[i]
            out = {"index": i, "a": _fr(a), "b": _fr(b), "c": _fr(c), "n": n}
            try:
                meas = projection.quad_sublevel_measure(a, b, c, n, p)
            except InequalityViolation as exc:
                return _fail(out, exc)
            out.update(measure=_fr(meas), bound=p**2 * float(p) ** (n / 2), ok=True)
            return out

        return {"cases": run_cases(case, len(ns), args.threads)}

    ns = args.n

    def gcase(i):
        n = ns[i]
        worst, bound = projection.quad_sublevel_grid(p, args.depth, n)
        return {"index": i, "n": n, "coeff_depth": args.depth, "worst_measure": _fr(worst), "bound": bound,
                "ok": float(worst) <= bound * (1 + 1e-12)}

    return {"cases": run_cases(gcase, len(ns), args.threads)}


def suite_bch(args) -> dict:
    K = Qp(args.p, args.precision)

    def case(i):
        rng = case_rng(args.seed, i)
        w1, w2 = _rvec_random(K, rng, sl2.BCH_M0), _rvec_random(K, rng, sl2.BCH_M0)
        out = {"index": i, "w1": [_scalar(e) for e in w1.entries()], "w2": [_scalar(e) for e in w2.entries()]}
        try:
            w = sl2.bch_product(w1, w2)
            out.update(valuation=w.valuation(), ok=True)
        except (InequalityViolation, PrecisionError) as exc:
            return _fail(out, exc)
        return out

    return {"cases": run_cases(case, args.trials, args.threads)}


def suite_gauss(args) -> dict:
    K = Qp(args.p, args.precision)
    n = args.level

    def case(i):
        rng = case_rng(args.seed, i)
        k = sl2.random_level(K, rng, n)
        out = {"index": i, "k": [_scalar(e) for e in k.entries()]}
        try:
            lo, mid, up = sl2.gauss_decompose(k, n)
            ok = (lo * mid * up) == k and lo.in_level(n) and mid.in_level(n) and up.in_level(n)
            out["ok"] = bool(ok)
        except (DomainError, PrecisionError) as exc:
            return _fail(out, exc)
        return out

    return {"cases": run_cases(case, args.trials, args.threads)}


def suite_bourgain(args) -> dict:
    p, m = args.p, args.depth
    alpha, eps = args.alpha[0], args.epsilon

    def case(i):
        rng = case_rng(args.seed, i)
        F = random_fractal_set(p, m, alpha, rng)
        out = {"index": i, "size": len(F), "alpha": alpha, "epsilon": eps}
        try:
            tree = fractal.PBallTree(F)
            D = max(fractal.energy_sum(tree, alpha, w) for w in F.points) / len(F) ** (1 + eps)
            res = fractal.bourgain_regularize(F, alpha, eps, max(D, 1.0), check_size=args.mode == "verify")
            out.update(w0=list(res.w0), l1=res.l1, l1_range=list(res.l1_range), C_prime=res.C_prime,
                       kept=len(res.F_prime), ok=res.postcondition_ok)
        except (SizeConditionError, DomainError) as exc:
            return _fail(out, exc)
        return out

    return {"cases": run_cases(case, args.trials, args.threads)}


def suite_projection(args) -> dict:
    p, m = args.p, args.depth
    alpha, eps = args.alpha[0], args.epsilon
    kinds = args.sets

    def case(i):
        kind = kinds[i]
        rng = case_rng(args.seed, i)
        if kind == "w12-axis":
            E = PointSet.from_points(p, m, [(0, t, 0) for t in range(p**m)])
        elif kind == "w21-axis":
            E = PointSet.from_points(p, m, [(0, 0, t) for t in range(p**m)])
        else:
            E = random_fractal_set(p, m, alpha, rng)
        rep = projection.projection_theorem_scan(E, m, 0, alpha, eps, r_depth=args.r_depth,
                                                 diagnose=args.mode == "diagnose")
        out = {"index": i, "set": kind, "size": len(E)}
        out.update(rep.to_dict())
        out["hypothesis_D"] = rep.hypothesis_D
        out["ok"] = rep.exceptional_mass <= 1 / p + 1e-12
        return out

    return {"cases": run_cases(case, len(kinds), args.threads)}


def suite_shear(args) -> dict:
    p, m = args.p, args.depth
    adv = list(adversarial_shear_sets(p, m).items())
    n = args.trials + len(adv)

    def case(i):
        if i < len(adv):
            name, E = adv[i]
        else:
            name, E = "random", random_valuation_set(p, m, args.size, case_rng(args.seed, i))
        out = {"index": i, "set": name, "size": len(E)}
        try:
            res = projection.shear_select(E)
        except InequalityViolation as exc:
            return _fail(out, exc)
        pointwise = all(projection.shear_condition(w, p) for w in res.Ehat.points)
        out.update(r0=res.r0, case=res.case, kept=len(res.Ehat), ok=pointwise and 4 * len(res.Ehat) >= len(E))
        return out

    return {"cases": run_cases(case, n, args.threads)}


def suite_sobolev(args) -> dict:
    G = sobolev.FiniteQuotient(args.p, args.level)
    d = args.d
    consts = sobolev.derived_constants(G, d)

    def case(i):
        rng = case_rng(args.seed, i)
        f, f2 = G.random_function(rng), G.random_function(rng)
        g = int(rng.integers(G.size))
        r = max(rr for rr in range(G.n + 1) if G.in_level(g, rr))
        out = {"index": i, "g": [int(x) for x in G.elements[g]], "r": r}
        rep = sobolev.verify_properties(f, f2, g, d, r, raise_on_fail=False)
        recon = sum((sobolev.pr_project(f, m) for m in range(G.n + 1)), start=f * 0.0)
        out.update(s1=list(rep.s1[:2]), s2=list(rep.s2[:2]), s3=list(rep.s3[:2]), s4=list(rep.s4[:2]),
                   reconstruction_error=float(np.max(np.abs(recon.values - f.values))))
        out["ok"] = bool(rep.ok and out["reconstruction_error"] <= 1e-12)
        return out

    res = run_cases(case, args.trials, args.threads)
    return {"cases": res, "constants": {"C1": consts.C1, "C3": consts.C3, "C4": consts.C4, "d": d}}


def suite_margulis(args) -> dict:
    p = args.p
    a = args.alpha[0]
    c2 = margulis.measure_c2(p, a, depth=2)
    m = margulis.compute_m_alpha(a, c2, p)
    nu = margulis.WalkMeasure(p, m, 1)
    grid = [(c, ell) for c in range(args.trials) for ell in args.ell]

    def case(i):
        cfg_idx, ell = grid[i]
        rng = case_rng(args.seed, cfg_idx)
        vecs = set()
        while len(vecs) < args.size:
            w = tuple(int(p ** int(rng.integers(0, 3)) * rng.integers(-p**4, p**4)) for _ in range(3))
            if any(w):
                vecs.add(w)
        cfg = margulis.TransverseConfig(sorted(vecs), a)
        rep = margulis.margulis_recursion_check(cfg, nu, ell, m_alpha=m)
        out = {"index": i, "config": cfg_idx}
        out.update(rep.to_dict())
        return out

    return {"cases": run_cases(case, len(grid), args.threads), "constants": {"c2": c2, "m_alpha": m}}


def suite_siegel(args) -> dict:
    def case(i):
        rng = case_rng(args.seed, i)
        T = int(rng.integers(2, args.T + 1))
        rows = int(rng.integers(1, 4))
        cols = int(rng.integers(rows, 7))
        A = [[int(rng.integers(-T, T + 1)) for _ in range(cols)] for _ in range(rows)]
        out = {"index": i, "A": A, "T": T}
        try:
            B = heights.integer_kernel_basis(A, T)
        except InequalityViolation as exc:
            return _fail(out, exc)
        rank = len(heights.independent_rows(A))
        ok = len(B) == cols - rank and heights.is_saturated(B, cols)
        out.update(basis=B, max_norm=max((max(map(abs, b)) for b in B), default=0), bound=T ** (3 * cols), ok=ok)
        return out

    return {"cases": run_cases(case, args.trials, args.threads)}


def suite_heights(args) -> dict:
    p = args.p
    S = ("inf", p)

    def case(i):
        rng = case_rng(args.seed, i)
        num = int(rng.integers(1, 10**6)) * (1 if rng.random() < 0.5 else -1)
        den = int(rng.integers(1, 10**4))
        x = Fraction(num, den)
        out = {"index": i, "x": _fr(x)}
        try:
            rec = heights.place_norms(heights.SAdicScalar(x, S))
            # an S-integer of Z[1/p]: integer times a power of p
            y = Fraction(num) * Fraction(p) ** int(rng.integers(-6, 7))
            heights.inverse_norm_check(heights.SAdicScalar(y, S))
        except (InequalityViolation, DomainError) as exc:
            return _fail(out, exc)
        out.update(all_product=_fr(rec.all_product), s_integer_checked=_fr(y), ok=rec.all_product == 1)
        return out

    return {"cases": run_cases(case, args.trials, args.threads)}


SUITES = {
    "contraction": suite_contraction,
    "m-alpha": suite_m_alpha,
    "interpolation": suite_interpolation,
    "bch": suite_bch,
    "gauss": suite_gauss,
    "bourgain": suite_bourgain,
    "projection": suite_projection,
    "shear": suite_shear,
    "sobolev": suite_sobolev,
    "margulis": suite_margulis,
    "siegel": suite_siegel,
    "heights": suite_heights,
}
