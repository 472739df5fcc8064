"""The restricted projections xi_r and experiments around them.

``xi_r(w) = (Ad_{u_r} w)_{12} = w12 - 2 w11 r - w21 r^2``.  Point sets in r are
``PointSet`` objects of dimension 3 whose coordinates are ``(w11, w12, w21)``
residues mod p^m, taken as exact integer representatives.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction

import numpy as np

from .errors import DomainError, InequalityViolation
from .fractal import PointSet, non_concentration_profile
from .padic import Qp, vp
from .sl2 import RVec, bch_product


def xi(r, w: RVec):
    """(1,2) coordinate of ``Ad_{u_r} w``."""
    return w.w12 - 2 * w.w11 * r - w.w21 * r * r


def xi_int(r: int, w) -> int:
    """``xi_r`` on exact integer coordinates."""
    w11, w12, w21 = w
    return w12 - 2 * w11 * r - w21 * r * r


def _xi_mod(arr: np.ndarray, r: int, q: int) -> np.ndarray:
    """``xi_r`` of every row of ``arr`` reduced mod q, without int64 overflow for q < 3e9."""
    if q >= 3_000_000_000:
        vals = [xi_int(r, tuple(int(c) for c in row)) % q for row in arr]
        return np.array(vals, dtype=object)
    r1 = r % q
    r2 = (r1 * r1) % q
    t1 = (2 * arr[:, 0] % q) * r1 % q
    t2 = arr[:, 2] * r2 % q
    return (arr[:, 1] - t1 - t2) % q


# -- projection theorem scan ------------------------------------------------

@dataclass
class RRecord:
    r: int
    good: bool
    er_size: int
    constants: list


@dataclass
class ProjectionReport:
    p: int
    depth: int
    alpha: float
    epsilon: float
    l0: int
    l1: int
    hypothesis_D: float
    cap: float
    J: tuple
    rs: list = field(default_factory=list)

    @property
    def exceptional(self) -> list:
        return [rec.r for rec in self.rs if not rec.good]

    @property
    def exceptional_mass(self) -> float:
        return len(self.exceptional) * float(self.p) ** (-self.depth)

    @property
    def exceptional_fraction(self) -> Fraction:
        """Exceptional residues as a fraction of J."""
        return Fraction(len(self.exceptional), len(self.rs))

    @property
    def max_good_constant(self) -> float:
        vals = [max(rec.constants) for rec in self.rs if rec.good]
        return max(vals) if vals else math.inf

    def to_dict(self) -> dict:
        return {
            "p": self.p,
            "depth": self.depth,
            "alpha": self.alpha,
            "epsilon": self.epsilon,
            "rs": [asdict(rec) for rec in self.rs],
            "exceptional_mass": self.exceptional_mass,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def j_residues(p: int, depth: int, center: int = 0, radius_exp: int = 0) -> list[int]:
    """Depth-``depth`` residues of the ball ``J = center + p^radius_exp Z_p``."""
    if radius_exp > depth:
        raise ValueError("J is finer than the enumeration depth")
    step = p**radius_exp
    base = center % step
    return list(range(base, p**depth, step))


def projection_theorem_scan(E: PointSet, l0: int, l1: int, alpha: float, epsilon: float, *,
                            D: float | None = None, J: tuple = (0, 0), r_depth: int = 2,
                            cap: float | None = None, diagnose: bool = False) -> ProjectionReport:
    """Measure projected non-concentration of E along ``xi_r`` for every depth-``r_depth`` r in J.

    For each w the constant is ``c(w) = max_k (#{w': xi_r(w') = xi_r(w) mod p^k}/#E) p^((alpha-eps)(k-l1))``
    over ``l1 <= k <= l0``.  E_r keeps the ``ceil((1-1/p)#E)`` points with the
    smallest c(w); r is good when the largest kept constant is at most ``cap``
    (default ``D p^(alpha-eps)``).
    """
    if E.d != 3:
        raise ValueError("projection scans need points of r (dimension 3)")
    p = E.p
    prof = non_concentration_profile(E, l0, l1, alpha)
    if D is None:
        D = prof.D
    elif prof.D > D * (1 + 1e-9) and not diagnose:
        raise DomainError(f"non-concentration hypothesis fails: measured D'={prof.D} > {D}")
    if cap is None:
        cap = D * float(p) ** (alpha - epsilon)
    arr = E.as_array()
    n = len(E)
    keep = math.ceil((1 - 1 / p) * n - 1e-12)
    s = alpha - epsilon
    report = ProjectionReport(p, r_depth, alpha, epsilon, l0, l1, D, cap, tuple(J))
    for r in j_residues(p, r_depth, *J):
        per_scale = []
        for k in range(l1, l0 + 1):
            proj = _xi_mod(arr, r, p**k)
            _, inv, cnt = np.unique(proj, return_inverse=True, return_counts=True)
            per_scale.append(cnt[inv.ravel()] / n * float(p) ** (s * (k - l1)))
        c = np.max(np.vstack(per_scale), axis=0)
        order = np.sort(c)
        C_r = float(order[keep - 1])
        er_size = int(np.count_nonzero(c <= C_r))
        good = er_size >= keep and C_r <= cap * (1 + 1e-12)
        consts = [float(np.max(np.sort(sc)[:keep])) for sc in per_scale]
        report.rs.append(RRecord(r, bool(good), er_size, consts))
    return report


# -- quadratic sublevel sets ---------------------------------------------

def _as_int(x, p):
    if isinstance(x, int):
        return x
    if hasattr(x, "residue"):
        if not x.is_exact_zero and x.valuation < 0:
            raise DomainError("coefficient outside Z_p")
        return x.to_fraction().numerator * pow(x.to_fraction().denominator, -1, p**40) % p**40
    f = Fraction(x)
    if f.denominator % p == 0:
        raise DomainError("coefficient outside Z_p")
    return f.numerator * pow(f.denominator, -1, p**40) % p**40


def quad_sublevel_measure(a, b, c, n: int, p: int, depth: int | None = None, *, check: bool = True) -> Fraction:
    """Haar measure of ``{t in Z_p : |a t^2 + b t + c|_p <= p^n}`` for ``n <= 0``.

    With a, b, c in Z_p the set is a union of classes mod ``p^-n``, so it is
    counted exactly at that depth.  When ``max(|a|,|b|,|c|) = 1`` and ``check`` is
    set, the bound ``p^2 p^(n/2)`` is asserted.
    """
    if n > 0:
        raise ValueError("n must be <= 0")
    k = -n
    depth = k if depth is None else depth
    if depth < k:
        raise ValueError(f"depth {depth} too small for n={n}")
    a, b, c = (_as_int(x, p) for x in (a, b, c))
    q = p**k
    if k == 0:
        count = 1
    else:
        t = np.arange(q, dtype=object if q > 3_000_000 else np.int64)
        vals = ((a % q) * t % q * t + (b % q) * t + c % q) % q
        count = int(np.count_nonzero(vals == 0))
    meas = Fraction(count * p ** (depth - k), p**depth)
    if check and min(vp(a, p), vp(b, p), vp(c, p)) == 0:
        bound = p**2 * float(p) ** (n / 2)
        if float(meas) > bound * (1 + 1e-12):
            raise InequalityViolation("quadratic sublevel bound fails", {"a": a, "b": b, "c": c, "n": n, "measure": meas})
    return meas


def quad_sublevel_grid(p: int, coeff_depth: int, n: int) -> tuple[Fraction, float]:
    """Largest sublevel measure over all ``(a, b, c)`` mod ``p^coeff_depth`` of max norm 1.

    Returns the worst measure and the bound ``p^2 p^(n/2)``.
    """
    k = -n
    q = p**k
    t = np.arange(max(q, 1), dtype=np.int64)
    R = p**coeff_depth
    coeffs = np.arange(R, dtype=np.int64)
    worst = 0
    for a in range(R):
        at2 = (a * t % max(q, 1)) * t % max(q, 1)
        for b in range(R):
            base = (at2 + b * t) % max(q, 1)
            if a % p == 0 and b % p == 0:
                cs = coeffs[coeffs % p != 0]
            else:
                cs = coeffs
            if k == 0:
                worst = max(worst, 1)
                continue
            vals = (base[None, :] + cs[:, None]) % q
            worst = max(worst, int(np.max(np.count_nonzero(vals == 0, axis=1))))
    meas = Fraction(worst, max(q, 1))
    return meas, p**2 * float(p) ** (n / 2)


# -- shear selection -------------------------------------------------------

def _val(x: int, p: int) -> float:
    return vp(x, p)


def shear_condition(w, p: int) -> bool:
    """``|w12|_p >= p^-4 ||w||_p`` on exact integer coordinates."""
    vw = min(_val(c, p) for c in w)
    if vw == math.inf:
        return True
    return _val(w[1], p) <= vw + 4


def _ad_u_int(r: int, w, q: int):
    w11, w12, w21 = w
    return ((w11 + w21 * r) % q, xi_int(r, w) % q, w21 % q)


@dataclass
class ShearResult:
    r0: int
    Ehat: PointSet
    case: str


def shear_select(E: PointSet, *, search_depth: int = 5) -> ShearResult:
    """Pick ``r0`` and keep the points of ``Ad_{u_r0} E`` with ``|w12| >= p^-4 ||w||``.

    Tries r0 = 0, then the case split on ``|w21|`` (r0 = p^2 when
    ``|w21| = ||w||``, r0 = 1 otherwise), then every r mod ``p^search_depth``.
    """
    if len(E) == 0:
        raise ValueError("empty point set")
    p, q = E.p, E.p**E.m
    need = len(E) / 4

    def attempt(r0):
        imgs = [_ad_u_int(r0, w, q) for w in E.points]
        good = [w for w in imgs if shear_condition(w, p)]
        return good

    good = attempt(0)
    if len(good) >= need:
        return ShearResult(0, E.subset(good), "identity")
    rest = [w for w in E.points if not shear_condition(w, p)]
    big = [w for w in rest if _val(w[2], p) == min(_val(c, p) for c in w)]
    r0 = p**2 if 2 * len(big) >= len(rest) else 1
    good = attempt(r0)
    if len(good) >= need:
        return ShearResult(r0, E.subset(good), "w21-large" if r0 == p**2 else "w21-small")
    best = None
    for r in range(p**search_depth):
        g = attempt(r)
        if best is None or len(g) > len(best[1]):
            best = (r, g)
        if len(g) == len(E):
            break
    r0, good = best
    if len(good) < need:
        raise InequalityViolation("no shear keeps a quarter of the points", {"best_r": r0, "kept": len(good)})
    return ShearResult(r0, E.subset(good), "search")


# -- base point change ----------------------------------------------------

def change_base_point(Fp: PointSet, w0, *, prec: int | None = None) -> PointSet:
    """Image of F' under ``w' -> w`` with ``exp(w) = exp(w') exp(-w0)``."""
    p, m = Fp.p, Fp.m
    K = Qp(p, prec or m + 4)
    if not isinstance(w0, RVec):
        w0 = RVec.from_ints(K, *w0)
    if w0.valuation_bound() < 2:
        raise DomainError("base point outside the BCH domain")
    out = []
    for pt in Fp.points:
        if any(vp(c, p) < 2 for c in pt):
            raise DomainError(f"point {pt} outside the BCH domain")
        w = bch_product(RVec.from_ints(K, *pt), w0)
        out.append(tuple(_residue_or_zero(e, m) for e in w.entries()))
    return PointSet(p, 3, m, tuple(out))


def _residue_or_zero(x, m: int) -> int:
    if x.is_exact_zero or x.valuation >= m:
        return 0
    return x.residue(m)


__all__ = [
    "xi", "xi_int", "ProjectionReport", "RRecord", "projection_theorem_scan", "j_residues",
    "quad_sublevel_measure", "quad_sublevel_grid", "shear_condition", "shear_select",
    "ShearResult", "change_base_point",
]
