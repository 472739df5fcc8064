"""Contraction of ``||a_k u_r w||^-alpha`` under the unipotent average and the walk it drives.

For ``w`` in r and ``lambda = p^-k`` (so ``|lambda|_p = p^k``)

    d_lambda u_r . w = (w11 + r w21, lambda^2 xi_r(w), lambda^-2 w21),

so ``||d_lambda u_r . w|| = max(|w11 + r w21|, p^(2k) |xi_r(w)|, p^(-2k) |w21|)``.
The integral over ``r in Z_p`` is computed exactly by splitting Z_p into balls
on which this norm is constant or has a closed-form law.
"""
from __future__ import annotations

import itertools
from collections import Counter
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .errors import DomainError, InequalityViolation
from .fractal import PointSet, energy_sum
from .padic import INF, PAdicScalar, randbelow, vp
from .sl2 import RVec


# -- integer coordinates --------------------------------------------------

def int_coords(w, p: int) -> tuple[tuple[int, int, int], int]:
    """Integer triple ``c`` and shift ``s`` with ``w = p^-s c``."""
    if isinstance(w, RVec):
        fr = [e.to_fraction() for e in w.entries()]
    else:
        fr = [Fraction(x) for x in w]
    s = 0
    for f in fr:
        if f:
            s = max(s, int(vp(f.denominator, p)))
    out = []
    for f in fr:
        g = f * Fraction(p) ** s
        if g.denominator % p == 0:
            raise DomainError("coordinate has p in the denominator after scaling")
        # a denominator prime to p is replaced by its inverse mod a high power of p
        den = g.denominator
        out.append(g.numerator if den == 1 else g.numerator * pow(den, -1, p**60) % p**60)
    return tuple(out), s


def norm_exponent(c: Sequence[int], p: int) -> float:
    """``e`` with ``||c||_p = p^e`` (``-inf`` for the zero vector)."""
    v = min(vp(x, p) for x in c)
    return -v


# -- exact contraction integral -------------------------------------------

def _v(x: int, p: int) -> float:
    return vp(x, p)


def norm_distribution(w, k: int, p: int) -> dict[int, Fraction]:
    """Law of ``log_p ||d_{p^-k} u_r . w||`` for Haar-random ``r in Z_p``.

    Returns ``{e: mass}`` with exact rational masses summing to 1.
    """
    if k < 1:
        raise DomainError("need |lambda|_p > 1, i.e. k >= 1")
    c, s = int_coords(w, p)
    w11, w12, w21 = c
    if w11 == w12 == w21 == 0:
        raise DomainError("w must be nonzero")
    dist: dict[int, Fraction] = {}
    # floor term p^-2k |w21| as a valuation
    vF = _v(w21, p) + 2 * k

    def add(e, mass):
        e = int(e) + s
        dist[e] = dist.get(e, Fraction(0)) + mass

    stack = [(0, 0)]
    while stack:
        r0, j = stack.pop()
        mass = Fraction(1, p**j)
        pj = p**j
        l0 = w11 + r0 * w21
        l1 = w21 * pj
        q0 = w12 - 2 * w11 * r0 - w21 * r0 * r0
        q1 = -2 * pj * l0
        q2 = -w21 * pj * pj
        vl0, vl1 = _v(l0, p), _v(l1, p)
        vq0, vq1, vq2 = _v(q0, p) - 2 * k, _v(q1, p) - 2 * k, _v(q2, p) - 2 * k
        L_const = vl0 < vl1 or (l0 == 0 and l1 == 0)
        Q_const = (vq0 < vq1 and vq0 < vq2) or (q0 == 0 and q1 == 0 and q2 == 0)
        # valuations of the constant parts and lower bounds for the varying parts
        const_vals = [vF]
        var_bounds = []
        if L_const:
            const_vals.append(vl0)
        else:
            var_bounds.append(min(vl0, vl1))
        if Q_const:
            const_vals.append(vq0)
        else:
            var_bounds.append(min(vq0, vq1, vq2))
        vc = min(const_vals)
        if vc == INF and not var_bounds:
            raise DomainError("norm vanishes identically")
        if vc != INF and all(vc <= b for b in var_bounds):
            add(-vc, mass)
            continue
        if L_const and not Q_const and vq1 < vq2 and vq0 >= vq1:
            # single simple root tau: |q(t)| = |q1| |t - tau| on Z_p
            mu = min(vl0, vF)       # valuation of the constant part M
            chi = vq1               # valuation of X = p^2k |q1|
            i = 0
            while chi + i < mu:
                add(-(chi + i), mass * Fraction(p - 1, p) / p**i)
                i += 1
            add(-mu, mass / p**i)
            continue
        for a in range(p - 1, -1, -1):
            stack.append((r0 + a * pj, j + 1))
    return dict(sorted(dist.items()))


def integral_from_distribution(dist: dict, alpha: float, p: int) -> float:
    return math.fsum(float(m) * float(p) ** (-alpha * e) for e, m in sorted(dist.items()))


def _norm_at(c, r: int, k: int, p: int) -> float:
    w11, w12, w21 = c
    vals = [_v(w11 + r * w21, p), _v(w12 - 2 * w11 * r - w21 * r * r, p) - 2 * k, _v(w21, p) + 2 * k]
    return -min(vals)


def contraction_integral_enumerate(w, k: int, alpha: float, p: int, *, start_depth: int = 1,
                                   max_depth: int = 12) -> float:
    """Brute force over residue representatives mod ``p^R``.

    The law of the norm exponent is tallied exactly at each depth R; once two
    consecutive depths give the same law it is integrated.
    """
    c, s = int_coords(w, p)
    prev = None
    for R in range(start_depth, max_depth + 1):
        q = p**R
        tally = Counter(_norm_at(c, r, k, p) + s for r in range(q))
        law = {e: Fraction(n, q) for e, n in tally.items()}
        if prev is not None and law == prev:
            return integral_from_distribution(law, alpha, p)
        prev = law
    raise DomainError(f"enumeration did not stabilize by depth {max_depth}")


def contraction_integral(w, k: int, alpha: float, p: int, *, method: str = "exact",
                         c2: float | None = None) -> float:
    """``int_{Z_p} ||d_{p^-k} u_r . w||^-alpha dr``.

    With ``c2`` given, asserts the bound ``c2 p^(-k alpha_hat) / (p - p^alpha) ||w||^-alpha``
    with ``alpha_hat = (1 - alpha)/4``.
    """
    if isinstance(k, PAdicScalar):
        if k.is_zero() or k.valuation >= 0:
            raise DomainError("lambda must satisfy |lambda|_p > 1")
        k = int(-k.valuation)
    if method == "exact":
        val = integral_from_distribution(norm_distribution(w, k, p), alpha, p)
    elif method == "enumerate":
        val = contraction_integral_enumerate(w, k, alpha, p)
    else:
        raise ValueError(f"unknown method {method!r}")
    if c2 is not None:
        c, s = int_coords(w, p)
        wn = float(p) ** (norm_exponent(c, p) + s)
        bound = c2 * float(p) ** (-k * alpha_hat(alpha)) / (p - p**alpha) * wn ** (-alpha)
        if val > bound * (1 + 1e-9):
            raise InequalityViolation("contraction bound fails", {"w": w, "k": k, "value": val, "bound": bound})
    return val


def alpha_hat(alpha: float) -> float:
    return (1 - alpha) / 4


# -- direction grids, C2 and m_alpha -------------------------------------

def direction_classes(p: int, depth: int) -> list[tuple[int, int, int]]:
    """Representatives of norm-1 vectors mod ``p^depth`` up to unit scaling.

    The first unit coordinate is normalized to 1, which gives
    ``p^(2 depth - 2) (p^2 + p + 1)`` classes.
    """
    q = p**depth
    out = []
    for first in range(3):
        for rest in itertools.product(range(q), repeat=2 - first):
            # coordinates before the unit one must be non-units
            for pre in itertools.product(range(0, q, p), repeat=first):
                vec = list(pre) + [1] + list(rest)
                out.append(tuple(vec))
    return sorted(set(out))


def measure_c2(p: int, alpha: float, *, depth: int = 3, kmax: int = 3, safety: float = 2.0,
               directions: Iterable | None = None) -> float:
    """Empirical ``C2``: max of ``I (p - p^alpha) p^(k alpha_hat)`` over norm-1 directions, times ``safety``."""
    dirs = list(directions) if directions is not None else direction_classes(p, depth)
    ah = alpha_hat(alpha)
    worst = 0.0
    for k in range(1, kmax + 1):
        for w in dirs:
            val = contraction_integral(w, k, alpha, p)
            worst = max(worst, val * (p - p**alpha) * float(p) ** (k * ah))
    return safety * worst


def compute_m_alpha(alpha: float, c2: float, p: int) -> int:
    """Smallest m with ``c2 p^(-alpha_hat m) / (p - p^alpha) <= 1/p``."""
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    ah = alpha_hat(alpha)
    m = max(0, math.ceil(math.log(c2 * p / (p - p**alpha), p) / ah - 1e-12))
    while m > 0 and c2 * float(p) ** (-ah * (m - 1)) / (p - p**alpha) <= 1 / p:
        m -= 1
    while c2 * float(p) ** (-ah * m) / (p - p**alpha) > 1 / p:
        m += 1
    return m


def verify_m_alpha(m: int, alpha: float, p: int, directions: Iterable) -> list:
    """Directions violating ``I(w, m) <= p^-1 ||w||^-alpha`` (empty when the contraction holds)."""
    bad = []
    for w in directions:
        val = contraction_integral(w, m, alpha, p)
        c, s = int_coords(w, p)
        bound = float(p) ** (-1 - alpha * (norm_exponent(c, p) + s))
        if val > bound * (1 + 1e-9):
            bad.append((w, val, bound))
    return bad


# -- the walk ------------------------------------------------------------

@dataclass(frozen=True)
class WalkMeasure:
    """``nu``: law of ``a_m u_r`` with ``r`` Haar in Z_p, atoms at residues mod ``p^r_depth``."""

    p: int
    m_step: int
    r_depth: int = 1


@dataclass
class Atom:
    rs: tuple
    mass: Fraction

    def shift(self, p: int, m: int) -> int:
        """``R`` with ``a_m u_{r_l} ... a_m u_{r_1} = a_{lm} u_R``."""
        return sum(r * p ** (2 * m * i) for i, r in enumerate(self.rs))


@dataclass
class Convolution:
    nu: WalkMeasure
    ell: int
    atoms: list
    monte_carlo: bool = False
    seed: int | None = None
    samples: int | None = None

    @property
    def total_mass(self) -> Fraction:
        return sum((a.mass for a in self.atoms), Fraction(0))


def walk_convolve(nu: WalkMeasure, ell: int, *, budget: int = 10**6, samples: int | None = None,
                  seed: int | None = None) -> Convolution:
    """Atoms of the ``ell``-fold convolution of ``nu``; Monte Carlo when ``samples`` is given."""
    if ell < 0:
        raise ValueError("ell must be >= 0")
    q = nu.p**nu.r_depth
    if samples is not None:
        if seed is None:
            raise ValueError("Monte Carlo mode needs a seed")
        rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
        atoms = [Atom(tuple(randbelow(rng, q) for _ in range(ell)), Fraction(1, samples)) for _ in range(samples)]
        return Convolution(nu, ell, atoms, True, seed, samples)
    count = q**ell
    if count > budget:
        raise DomainError(f"{count} atoms exceed the enumeration budget {budget}; pass samples and seed")
    mass = Fraction(1, count)
    atoms = [Atom(tuple(rs), mass) for rs in itertools.product(range(q), repeat=ell)]
    return Convolution(nu, ell, atoms)


def margulis_value(F: Iterable, alpha: float, p: int, k: int = 0, r: int = 0) -> float:
    """``f(a_k u_r) = sum_w ||Ad_{a_k u_r} w||^-alpha`` (``f(e)`` when k = r = 0)."""
    terms = []
    for w in F:
        c, s = int_coords(w, p)
        e = -min(_v(c[0] + r * c[2], p), _v(xi_int_local(c, r), p) - 2 * k, _v(c[2], p) + 2 * k) + s
        terms.append(float(p) ** (-alpha * e))
    return math.fsum(sorted(terms))


def xi_int_local(c, r):
    return c[1] - 2 * c[0] * r - c[2] * r * r


@dataclass
class TransverseConfig:
    F: list
    alpha: float

    def __post_init__(self):
        seen = set()
        for w in self.F:
            t = tuple(e.to_fraction() for e in w.entries()) if isinstance(w, RVec) else tuple(Fraction(x) for x in w)
            if not any(t):
                raise DomainError("F must not contain the zero vector")
            if t in seen:
                raise DomainError("duplicate vectors in F")
            seen.add(t)
        if not 0 < self.alpha < 1:
            raise ValueError("alpha must lie in (0, 1)")


@dataclass
class RecursionReport:
    ell: int
    m_step: int
    lhs: float
    f_identity: float
    bound: float
    ok: bool
    atom_lhs: float | None = None
    precondition_ok: bool = True
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "ell": self.ell, "m_step": self.m_step, "lhs": self.lhs, "f_identity": self.f_identity,
            "bound": self.bound, "ok": self.ok, "atom_lhs": self.atom_lhs,
            "precondition_ok": self.precondition_ok,
        }


def margulis_recursion_check(cfg: TransverseConfig, nu: WalkMeasure, ell: int, *, m_alpha: int | None = None,
                             with_atoms: bool = False, diagnose: bool = False) -> RecursionReport:
    """Check ``int f d nu^(ell) <= p^-ell f(e)`` for ``f(h) = sum_w ||Ad_h w||^-alpha``.

    The ``ell``-step walk equals ``a_{ell m} u_R`` with R Haar-distributed, so
    the left side is a sum of exact contraction integrals at ``k = ell m``.
    """
    p, m = nu.p, nu.m_step
    pre_ok = m_alpha is None or m >= m_alpha
    if not pre_ok and not diagnose:
        raise DomainError(f"step {m} is below m_alpha = {m_alpha}")
    f_e = margulis_value(cfg.F, cfg.alpha, p)
    if ell == 0:
        lhs = f_e
    else:
        lhs = math.fsum(sorted(contraction_integral(w, ell * m, cfg.alpha, p) for w in cfg.F))
    bound = float(p) ** (-ell) * f_e
    atom_lhs = None
    if with_atoms:
        conv = walk_convolve(nu, ell)
        atom_lhs = math.fsum(
            float(a.mass) * margulis_value(cfg.F, cfg.alpha, p, ell * m, a.shift(p, m)) for a in conv.atoms
        )
    ok = lhs <= bound * (1 + 1e-9)
    return RecursionReport(ell, m, lhs, f_e, bound, ok, atom_lhs, pre_ok)


def energy_vs_margulis(F: PointSet, w0, alpha: float) -> tuple[float, float]:
    """Energy of F at ``w0`` and the transverse Margulis value after moving the base point to ``w0``."""
    from .projection import change_base_point

    energy = energy_sum(F, alpha, w0)
    moved = change_base_point(F, w0)
    terms = []
    for w in moved.points:
        if all(c == 0 for c in w):
            continue
        e = -min(vp(c, F.p) for c in w)
        terms.append(float(F.p) ** (-alpha * e))
    model = math.fsum(sorted(terms))
    if abs(energy - model) > 1e-12 * max(abs(energy), 1.0):
        raise InequalityViolation("energy and model Margulis value differ", {"energy": energy, "model": model})
    return energy, model
