"""SL2(Q_p), G = SL2 x SL2, the transverse algebra r = sl2 + {0}.

Conventions: ``u_r = (1 r; 0 1)``, ``u^-_r = (1 0; r 1)``,
``d_lam = diag(lam, 1/lam)`` and ``a_n = d_{p^-n}``.  An element ``w`` of r is
stored by its coordinates ``(w11, w12, w21)``; the (2,2) entry is ``-w11``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from math import comb, factorial

from .errors import DomainError, InequalityViolation, PrecisionError
from .padic import INF, PAdicScalar, Qp

# BCH domain radius exponent: w1, w2 must lie in B(0, p^-BCH_M0).
BCH_M0 = 2


def _min_valuation(entries) -> float:
    """Exact minimum valuation of a tuple of scalars; PrecisionError if undetermined."""
    known = [e.valuation for e in entries if not e.is_zero()]
    bounds = [e.valuation for e in entries if e.is_indeterminate]
    vd = min(known, default=INF)
    vb = min(bounds, default=INF)
    if vb < vd:
        raise PrecisionError(f"minimum valuation undetermined (>= {vb})")
    return vd


@dataclass(frozen=True, eq=False)
class RVec:
    w11: PAdicScalar
    w12: PAdicScalar
    w21: PAdicScalar

    @classmethod
    def from_ints(cls, K: Qp, w11, w12, w21) -> "RVec":
        return cls(K(w11), K(w12), K(w21))

    @property
    def p(self) -> int:
        return self.w11.p

    def entries(self):
        return (self.w11, self.w12, self.w21)

    def valuation(self) -> float:
        return _min_valuation(self.entries())

    def valuation_bound(self) -> float:
        """Lower bound for the valuation that never raises (indeterminate entries give their bound)."""
        return min(e.valuation for e in self.entries())

    def norm(self) -> float:
        v = self.valuation()
        return 0.0 if v == INF else float(self.p) ** (-v)

    def __add__(self, other: "RVec") -> "RVec":
        return RVec(self.w11 + other.w11, self.w12 + other.w12, self.w21 + other.w21)

    def __sub__(self, other: "RVec") -> "RVec":
        return RVec(self.w11 - other.w11, self.w12 - other.w12, self.w21 - other.w21)

    def __neg__(self) -> "RVec":
        return RVec(-self.w11, -self.w12, -self.w21)

    def scale(self, c) -> "RVec":
        return RVec(self.w11 * c, self.w12 * c, self.w21 * c)

    def __eq__(self, other):
        if not isinstance(other, RVec):
            return NotImplemented
        return all(a == b for a, b in zip(self.entries(), other.entries()))

    __hash__ = None  # type: ignore[assignment]

    def det(self) -> PAdicScalar:
        return -(self.w11 * self.w11) - self.w12 * self.w21

    def residues(self, k: int) -> tuple[int, int, int]:
        return tuple(e.residue(k) for e in self.entries())


class SL2Elem:
    """2x2 matrix ``(a b; c d)`` over Q_p with determinant 1 at working precision."""

    __slots__ = ("a", "b", "c", "d")

    def __init__(self, a, b, c, d, *, check: bool = True):
        self.a, self.b, self.c, self.d = a, b, c, d
        if check and not (a * d - b * c == 1):
            raise DomainError(f"determinant is not 1: {a * d - b * c!r}")

    @property
    def p(self) -> int:
        return self.a.p

    def entries(self):
        return (self.a, self.b, self.c, self.d)

    @classmethod
    def identity(cls, K: Qp) -> "SL2Elem":
        return cls(K(1), K.zero(), K.zero(), K(1), check=False)

    @classmethod
    def from_ints(cls, K: Qp, a, b, c, d) -> "SL2Elem":
        return cls(K(a), K(b), K(c), K(d))

    def __mul__(self, o: "SL2Elem") -> "SL2Elem":
        return SL2Elem(
            self.a * o.a + self.b * o.c,
            self.a * o.b + self.b * o.d,
            self.c * o.a + self.d * o.c,
            self.c * o.b + self.d * o.d,
            check=False,
        )

    def inv(self) -> "SL2Elem":
        return SL2Elem(self.d, -self.b, -self.c, self.a, check=False)

    def det(self) -> PAdicScalar:
        return self.a * self.d - self.b * self.c

    def __eq__(self, other):
        if not isinstance(other, SL2Elem):
            return NotImplemented
        return all(x == y for x, y in zip(self.entries(), other.entries()))

    __hash__ = None  # type: ignore[assignment]

    def dist_to_identity_valuation(self) -> float:
        """Valuation of ``||g - I||_p``."""
        return _min_valuation((self.a - 1, self.b, self.c, self.d - 1))

    def in_level(self, n: int) -> bool:
        """``||g - I||_p <= p^-n``."""
        diffs = (self.a - 1, self.b, self.c, self.d - 1)
        for e in diffs:
            if e.is_exact_zero:
                continue
            if e.valuation < n and not e.is_indeterminate:
                return False
            if e.is_indeterminate and e.valuation < n:
                raise PrecisionError(f"entry only known to valuation {e.valuation}, need {n}")
        return True

    def ad(self, w: RVec) -> RVec:
        """``g w g^-1`` in coordinates."""
        m = (self * SL2Elem(w.w11, w.w12, w.w21, -w.w11, check=False)) * self.inv()
        return RVec(m.a, m.b, m.c)

    def __repr__(self):
        return f"SL2Elem({self.a!r}, {self.b!r}; {self.c!r}, {self.d!r})"


def u_plus(r: PAdicScalar) -> SL2Elem:
    K = _ctx(r)
    return SL2Elem(K(1), r, K.zero(), K(1), check=False)


def u_minus(r: PAdicScalar) -> SL2Elem:
    K = _ctx(r)
    return SL2Elem(K(1), K.zero(), r, K(1), check=False)


def diag(lam: PAdicScalar) -> SL2Elem:
    K = _ctx(lam)
    return SL2Elem(lam, K.zero(), K.zero(), lam.inverse(), check=False)


def a_elem(K: Qp, n: int) -> SL2Elem:
    """``a_n = d_{p^-n}``."""
    return diag(PAdicScalar(K.p, -n, 1, K.prec))


def _ctx(x: PAdicScalar) -> Qp:
    prec = x.prec if x.prec not in (INF, 0) else 20
    return Qp(x.p, prec)


@dataclass(frozen=True, eq=False)
class GElem:
    """Element of SL2(Q_p) x SL2(Q_p)."""

    left: SL2Elem
    right: SL2Elem

    def __mul__(self, o: "GElem") -> "GElem":
        return GElem(self.left * o.left, self.right * o.right)

    def inv(self) -> "GElem":
        return GElem(self.left.inv(), self.right.inv())

    def __eq__(self, other):
        if not isinstance(other, GElem):
            return NotImplemented
        return self.left == other.left and self.right == other.right

    __hash__ = None  # type: ignore[assignment]

    @classmethod
    def identity(cls, K: Qp) -> "GElem":
        return cls(SL2Elem.identity(K), SL2Elem.identity(K))

    @classmethod
    def n(cls, r: PAdicScalar, s: PAdicScalar) -> "GElem":
        return cls(u_plus(r + s), u_plus(r))

    @classmethod
    def u(cls, r: PAdicScalar) -> "GElem":
        return cls.n(r, PAdicScalar.exact_zero(r.p))

    @classmethod
    def v(cls, s: PAdicScalar) -> "GElem":
        return cls.n(PAdicScalar.exact_zero(s.p), s)

    @classmethod
    def d(cls, lam: PAdicScalar) -> "GElem":
        return cls(diag(lam), diag(lam))

    @classmethod
    def a(cls, K: Qp, n: int) -> "GElem":
        return cls(a_elem(K, n), a_elem(K, n))

    @classmethod
    def diagonal(cls, h: SL2Elem) -> "GElem":
        return cls(h, h)


def level_membership(g, n: int) -> bool:
    """``g in K[n]``: ``||g - I||_p <= p^-n`` in every factor."""
    if isinstance(g, GElem):
        return g.left.in_level(n) and g.right.in_level(n)
    return g.in_level(n)


def group_op(op: str, g: GElem, h: GElem | None = None) -> GElem:
    if op == "mul":
        return g * h
    if op == "inv":
        return g.inv()
    if op == "identity":
        K = _ctx(g.left.a)
        return GElem.identity(K)
    raise ValueError(f"unknown group op {op!r}")


# -- adjoint actions ------------------------------------------------------

def ad_u(r: PAdicScalar, w: RVec) -> RVec:
    """``Ad_{u_r} w``."""
    return RVec(
        w.w11 + w.w21 * r,
        w.w12 - 2 * w.w11 * r - w.w21 * r * r,
        w.w21,
    )


def ad_diag(lam: PAdicScalar, w: RVec) -> RVec:
    """``Ad_{d_lam} w = (w11, lam^2 w12, lam^-2 w21)``."""
    if lam.is_zero():
        raise DomainError("lambda must be a nonzero scalar")
    lam2 = lam * lam
    return RVec(w.w11, w.w12 * lam2, w.w21 / lam2)


# -- Gauss decomposition --------------------------------------------------

def gauss_decompose(k: SL2Elem, n: int) -> tuple[SL2Elem, SL2Elem, SL2Elem]:
    """Write ``k in K_H[n]`` as ``u^-_{c/a} d_a u_{b/a}``."""
    if not k.in_level(n):
        raise DomainError(f"element is not in K_H[{n}]")
    if k.a.is_zero() or k.a.valuation != 0:
        raise DomainError("upper-left entry is not a unit")
    lower = u_minus(k.c / k.a)
    middle = diag(k.a)
    upper = u_plus(k.b / k.a)
    return lower, middle, upper


# -- exponential and logarithm on r ---------------------------------------

def _context_prec(entries) -> int:
    precs = [e.abs_prec for e in entries if e.abs_prec != INF]
    if not precs:
        return 20
    return int(max(precs))


def _cs_series(delta: PAdicScalar, target: int, p: int):
    """``C = sum delta^k/(2k)!`` and ``S = sum delta^k/(2k+1)!`` to absolute precision ``target``."""
    K = Qp(p, target) if p in (5, 7, 11, 13) else None
    one = PAdicScalar.from_rational(1, p, target)
    if delta.is_exact_zero:
        return one, one
    vd = delta.valuation
    if vd <= 1 / (p - 1) * 2:
        raise DomainError("series diverges: delta too large")
    C, S = one, one
    power = one
    k = 0
    while True:
        k += 1
        # lower bound for the valuation of every later term
        if k * vd - (2 * k + 1) / (p - 1) >= target:
            break
        power = power * delta
        C = C + power / factorial(2 * k)
        S = S + power / factorial(2 * k + 1)
    del K
    return C, S


def exp_r(w: RVec, prec: int | None = None) -> SL2Elem:
    """Matrix exponential on r via ``w^2 = -det(w) I``.

    ``exp(w) = C(delta) I + S(delta) w`` with ``delta = w11^2 + w12 w21``.
    Requires ``||w||_p <= p^-1``.
    """
    p = w.p
    if w.valuation_bound() < 1:
        raise DomainError("exp_r needs ||w||_p <= p^-1")
    target = prec or _context_prec(w.entries())
    delta = w.w11 * w.w11 + w.w12 * w.w21
    C, S = _cs_series(delta, target, p)
    return SL2Elem(C + S * w.w11, S * w.w12, S * w.w21, C - S * w.w11, check=False)


def _acosh_sq(t: PAdicScalar, target: int, p: int) -> PAdicScalar:
    """``arccosh(1 + t)^2 = -2 sum_{n>=1} (-2t)^n / (n^2 binom(2n, n))``."""
    if t.is_exact_zero:
        return t
    vt = t.valuation
    result = PAdicScalar.exact_zero(p)
    power = PAdicScalar.from_rational(1, p, target)
    n = 0
    while True:
        n += 1
        # v(n^2 binom(2n,n)) <= 2 log_p n + log_p 2n
        loss = 2 * math.log(n, p) + math.log(2 * n, p)
        if n > 1 and n * vt - loss >= target + 1:
            break
        power = power * (-2 * t)
        result = result + power * (-2) / (n * n * comb(2 * n, n))
    return result


def log_r(g: SL2Elem, prec: int | None = None) -> RVec:
    """Inverse of :func:`exp_r` on ``||g - I||_p <= p^-1``."""
    p = g.p
    if min(e.valuation for e in (g.a - 1, g.b, g.c, g.d - 1)) < 1:
        raise DomainError("log_r needs ||g - I||_p <= p^-1")
    target = prec or _context_prec(g.entries())
    half_trace = (g.a + g.d) / 2
    t = half_trace - 1
    delta = _acosh_sq(t, target, p)
    _, S = _cs_series(delta, target, p)
    return RVec((g.a - g.d) / (2 * S), g.b / S, g.c / S)


def bch_product(w1: RVec, w2: RVec, *, check: bool = True) -> RVec:
    """``w`` with ``exp(w1) exp(-w2) = exp(w)``; checks ``||w|| = ||w1 - w2||``."""
    for w in (w1, w2):
        if w.valuation_bound() < BCH_M0:
            raise DomainError(f"BCH inputs must have norm <= p^-{BCH_M0}")
    g = exp_r(w1) * exp_r(w2).inv()
    w = log_r(g)
    if check:
        diff = w1 - w2
        if _all_vanish(diff) and _all_vanish(w):
            return w
        try:
            vd, vw = diff.valuation(), w.valuation()
        except PrecisionError as exc:
            raise PrecisionError("BCH norm undetermined at working precision") from exc
        if vd != vw:
            raise InequalityViolation(
                "BCH norm equality failed",
                {"w1": w1, "w2": w2, "w": w, "v_diff": vd, "v_w": vw},
            )
    return w


def _all_vanish(w: RVec) -> bool:
    return all(e.is_zero() for e in w.entries())


# -- the thickening Q^H ---------------------------------------------------

def qh_membership(h: SL2Elem, eta_exp: int, beta_exp: int, m: int) -> bool:
    """``h in Q^H_{eta, beta, m}`` with ``eta = p^-eta_exp``, ``beta = p^-beta_exp``.

    Entry conditions: ``|a-1|, |d-1| <= beta``, ``|b| <= eta``, ``|c| <= beta p^-m``.
    """
    if not (beta_exp >= eta_exp >= 0):
        raise ValueError("need beta <= eta <= 1")
    return (
        _val_at_least(h.a - 1, beta_exp)
        and _val_at_least(h.d - 1, beta_exp)
        and _val_at_least(h.b, eta_exp)
        and _val_at_least(h.c, beta_exp + m)
    )


def _val_at_least(x: PAdicScalar, n: int) -> bool:
    if x.is_exact_zero:
        return True
    if x.is_indeterminate:
        if x.valuation >= n:
            return True
        raise PrecisionError(f"valuation only known to be >= {x.valuation}")
    return x.valuation >= n


def random_qh(K: Qp, rng, eta_exp: int, beta_exp: int, m: int) -> SL2Elem:
    """Random element ``u^-_s d_lam u_r`` of ``Q^H_{eta, beta, m}``."""
    s = K.random_integral(rng, beta_exp + m)
    lam = 1 + K.random_integral(rng, beta_exp)
    r = K.random_integral(rng, eta_exp)
    return u_minus(s) * diag(lam) * u_plus(r)


def random_level(K: Qp, rng, n: int) -> SL2Elem:
    """Random element of ``K_H[n]`` from its entries: ``a = 1 + p^n x``, ``b, c in p^n Z_p``, ``d = (1 + bc)/a``."""
    a = 1 + K.random_integral(rng, n)
    b = K.random_integral(rng, n)
    c = K.random_integral(rng, n)
    return SL2Elem(a, b, c, (1 + b * c) / a, check=False)


@dataclass
class ContainmentRecord:
    r_prime: PAdicScalar
    k_prime: SL2Elem
    k_prime_valuation: float
    shift_valuation: float
    ok: bool


def conjugation_containment(q: SL2Elem, k: SL2Elem, m: int, r: PAdicScalar, beta_exp: int) -> ContainmentRecord:
    """Rewrite ``q a_m u_r k`` as ``a_m u_{r'} k'`` with ``k'`` lower triangular.

    ``r' = B/D`` where ``(A B; C D) = a_m^-1 q a_m u_r k``.  The record is ``ok``
    when ``k' in K_{H, beta}`` and ``|r' - r| <= beta``.
    """
    K = _ctx(r)
    am = a_elem(K, m)
    M = am.inv() * q * am * u_plus(r) * k
    r_prime = M.b / M.d
    k_prime = u_plus(-r_prime) * M
    kv = k_prime.dist_to_identity_valuation()
    shift = r_prime - r
    sv = INF if shift.is_zero() else shift.valuation
    return ContainmentRecord(r_prime, k_prime, kv, sv, kv >= beta_exp and sv >= beta_exp)
