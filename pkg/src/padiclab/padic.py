"""Fixed relative-precision arithmetic in Q_p and Haar sums over Z_p.

An element is stored as ``p**valuation * unit`` where ``unit`` is known
modulo ``p**prec``.  Two kinds of zero exist:

* the exact zero (``valuation = inf``), produced from the integer 0 or by
  multiplying with an exact zero;
* an *indeterminate* element (``prec = 0``), which only records that the
  value lies in ``p**valuation * Z_p``.  It is what ``x - x`` returns when
  all tracked digits cancel.  Asking for its norm raises
  :class:`PrecisionError`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from numbers import Integral, Rational
from typing import Callable, Mapping, Sequence, Union

from .errors import PrecisionError

INF = math.inf
DEFAULT_PREC = 20
ALLOWED_PRIMES = (5, 7, 11, 13)


def vp(n: int, p: int) -> float:
    """p-adic valuation of a Python integer (``inf`` for 0)."""
    if n == 0:
        return INF
    n = abs(n)
    v = 0
    # strip large blocks first; bigints from deep series can carry hundreds of factors
    big = p**16
    while n % big == 0:
        n //= big
        v += 16
    while n % p == 0:
        n //= p
        v += 1
    return v


def vp_rational(x, p: int) -> float:
    x = Fraction(x)
    if x == 0:
        return INF
    return vp(x.numerator, p) - vp(x.denominator, p)


def check_prime(p: int, allowed=ALLOWED_PRIMES) -> int:
    if p not in allowed:
        raise ValueError(f"p must be one of {allowed}, got {p}")
    return p


Coercible = Union["PAdicScalar", int, Fraction]


class PAdicScalar:
    """Element of Q_p at finite relative precision.

    Instances are immutable.  ``==`` compares at the jointly tracked precision
    (``x == y`` iff ``x - y`` is zero up to what is known), so elements are
    deliberately unhashable.
    """

    __slots__ = ("p", "valuation", "unit", "prec")
    __hash__ = None  # type: ignore[assignment]

    def __init__(self, p: int, valuation, unit: int, prec):
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "valuation", valuation)
        object.__setattr__(self, "unit", unit)
        object.__setattr__(self, "prec", prec)

    def __setattr__(self, name, value):
        raise AttributeError("PAdicScalar is immutable")

    # -- constructors -----------------------------------------------------
    @classmethod
    def from_rational(cls, value, p: int, prec: int = DEFAULT_PREC) -> "PAdicScalar":
        value = Fraction(value)
        if value == 0:
            return cls.exact_zero(p)
        if prec < 1:
            raise ValueError("relative precision must be >= 1")
        num, den = value.numerator, value.denominator
        vn, vd = vp(num, p), vp(den, p)
        num //= p**vn
        den //= p**vd
        mod = p**prec
        unit = (num * pow(den, -1, mod)) % mod
        return cls(p, vn - vd, unit, prec)

    @classmethod
    def exact_zero(cls, p: int) -> "PAdicScalar":
        return cls(p, INF, 0, INF)

    @classmethod
    def indeterminate(cls, p: int, bound: int) -> "PAdicScalar":
        """Element known only to lie in ``p**bound * Z_p``."""
        return cls(p, bound, 0, 0)

    # -- predicates -------------------------------------------------------
    @property
    def is_exact_zero(self) -> bool:
        return self.valuation == INF

    @property
    def is_indeterminate(self) -> bool:
        return self.prec == 0

    def is_zero(self) -> bool:
        """True for the exact zero and for indeterminate elements."""
        return self.is_exact_zero or self.is_indeterminate

    @property
    def abs_prec(self):
        """Absolute precision: the element is known modulo ``p**abs_prec``."""
        return self.valuation + self.prec

    # -- coercion ---------------------------------------------------------
    def _coerce(self, other, rel=None) -> "PAdicScalar":
        if isinstance(other, PAdicScalar):
            if other.p != self.p:
                raise ValueError(f"prime mismatch: {self.p} vs {other.p}")
            return other
        if isinstance(other, (Integral, Rational)):
            other = Fraction(other)
            if other == 0:
                return PAdicScalar.exact_zero(self.p)
            if rel is None:
                target = self.abs_prec
                v = vp_rational(other, self.p)
                rel = DEFAULT_PREC if target == INF else max(1, int(target - v))
            return PAdicScalar.from_rational(other, self.p, rel)
        return NotImplemented

    def _mul_prec(self):
        return DEFAULT_PREC if self.prec in (INF, 0) else self.prec

    # -- arithmetic -------------------------------------------------------
    def __add__(self, other):
        y = self._coerce(other)
        if y is NotImplemented:
            return NotImplemented
        x = self
        if x.is_exact_zero:
            return y
        if y.is_exact_zero:
            return x
        p = x.p
        a = min(x.abs_prec, y.abs_prec)
        v0 = min(x.valuation, y.valuation)
        if a <= v0:
            return PAdicScalar.indeterminate(p, a)
        mod = p ** (a - v0)
        s = (x.unit * p ** (x.valuation - v0) + y.unit * p ** (y.valuation - v0)) % mod
        if s == 0:
            return PAdicScalar.indeterminate(p, a)
        k = vp(s, p)
        return PAdicScalar(p, v0 + k, s // p**k, a - v0 - k)

    __radd__ = __add__

    def __neg__(self):
        if self.is_zero():
            return self
        return PAdicScalar(self.p, self.valuation, (-self.unit) % self.p**self.prec, self.prec)

    def __sub__(self, other):
        y = self._coerce(other)
        if y is NotImplemented:
            return NotImplemented
        return self + (-y)

    def __rsub__(self, other):
        y = self._coerce(other)
        if y is NotImplemented:
            return NotImplemented
        return y + (-self)

    def __mul__(self, other):
        y = self._coerce(other, rel=self._mul_prec())
        if y is NotImplemented:
            return NotImplemented
        x = self
        if x.is_exact_zero or y.is_exact_zero:
            return PAdicScalar.exact_zero(x.p)
        v = x.valuation + y.valuation
        if x.is_indeterminate or y.is_indeterminate:
            return PAdicScalar.indeterminate(x.p, v)
        prec = min(x.prec, y.prec)
        return PAdicScalar(x.p, v, (x.unit * y.unit) % x.p**prec, prec)

    __rmul__ = __mul__

    def inverse(self) -> "PAdicScalar":
        if self.is_exact_zero:
            raise ZeroDivisionError("division by exact zero")
        if self.is_indeterminate:
            raise PrecisionError("division by an element of indeterminate valuation")
        mod = self.p**self.prec
        return PAdicScalar(self.p, -self.valuation, pow(self.unit, -1, mod), self.prec)

    def __truediv__(self, other):
        y = self._coerce(other, rel=self._mul_prec())
        if y is NotImplemented:
            return NotImplemented
        if y.is_exact_zero:
            raise ZeroDivisionError("division by exact zero")
        if self.is_exact_zero:
            if y.is_indeterminate:
                raise PrecisionError("division by an element of indeterminate valuation")
            return self
        return self * y.inverse()

    def __rtruediv__(self, other):
        y = self._coerce(other, rel=self._mul_prec())
        if y is NotImplemented:
            return NotImplemented
        return y / self

    def __pow__(self, n: int):
        if not isinstance(n, Integral):
            return NotImplemented
        if n < 0:
            return self.inverse() ** (-n)
        result = PAdicScalar.from_rational(1, self.p, self._mul_prec())
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def __eq__(self, other):
        y = self._coerce(other)
        if y is NotImplemented:
            return NotImplemented
        return (self - y).is_zero()

    # -- conversions ------------------------------------------------------
    def norm(self) -> float:
        if self.is_exact_zero:
            return 0.0
        if self.is_indeterminate:
            raise PrecisionError(f"norm of indeterminate element O({self.p}^{self.valuation})")
        return float(self.p) ** (-self.valuation)

    def to_fraction(self) -> Fraction:
        """A rational representative (the stored digits, exactly)."""
        if self.is_zero():
            return Fraction(0)
        return Fraction(self.p) ** self.valuation * self.unit

    def residue(self, k: int) -> int:
        """Residue modulo ``p**k`` of an element of Z_p."""
        if self.is_exact_zero:
            return 0
        if self.abs_prec < k:
            raise PrecisionError(f"only known modulo {self.p}^{self.abs_prec}, need {k}")
        if self.valuation < 0:
            raise ValueError("element is not in Z_p")
        return (self.unit * self.p**self.valuation) % self.p**k

    def with_prec(self, prec: int) -> "PAdicScalar":
        """Truncate to a smaller relative precision."""
        if self.is_zero() or prec >= self.prec:
            return self
        return PAdicScalar(self.p, self.valuation, self.unit % self.p**prec, prec)

    def __repr__(self):
        if self.is_exact_zero:
            return f"PAdicScalar(0, p={self.p})"
        if self.is_indeterminate:
            return f"O({self.p}^{self.valuation})"
        return f"{self.p}^{self.valuation}*{self.unit} + O({self.p}^{self.abs_prec})"


def randbelow(rng, n: int) -> int:
    """Uniform integer in ``[0, n)`` from a numpy Generator, for any size of ``n``."""
    if n < 2**63:
        return int(rng.integers(0, n))
    nbytes = (n.bit_length() + 71) // 8
    return int.from_bytes(rng.bytes(nbytes), "little") % n


class Qp:
    """Element factory for a fixed prime and relative precision."""

    def __init__(self, p: int, prec: int = DEFAULT_PREC, *, allowed=ALLOWED_PRIMES):
        self.p = check_prime(p, allowed)
        if prec < 1:
            raise ValueError("precision must be positive")
        self.prec = prec

    def __call__(self, value) -> PAdicScalar:
        if isinstance(value, PAdicScalar):
            return value
        return PAdicScalar.from_rational(value, self.p, self.prec)

    def zero(self) -> PAdicScalar:
        return PAdicScalar.exact_zero(self.p)

    def one(self) -> PAdicScalar:
        return self(1)

    def random_integral(self, rng, min_val: int = 0) -> PAdicScalar:
        """Haar-random element of ``p**min_val * Z_p`` known to absolute precision ``min_val + prec``."""
        d = randbelow(rng, self.p**self.prec)
        if d == 0:
            return PAdicScalar.indeterminate(self.p, min_val + self.prec)
        v = vp(d, self.p)
        unit = d // self.p**v
        return PAdicScalar(self.p, min_val + v, unit, self.prec - v)

    def random_unit(self, rng) -> PAdicScalar:
        while True:
            u = randbelow(rng, self.p**self.prec)
            if u % self.p:
                return PAdicScalar(self.p, 0, u, self.prec)


def arith(x: PAdicScalar, y: Coercible, op: str) -> PAdicScalar:
    """Field operation by name: ``add``, ``sub``, ``mul`` or ``div``."""
    ops = {
        "add": lambda a, b: a + b,
        "sub": lambda a, b: a - b,
        "mul": lambda a, b: a * b,
        "div": lambda a, b: a / b,
    }
    try:
        return ops[op](x, y)
    except KeyError:
        raise ValueError(f"unknown op {op!r}") from None


def padic_norm(x: PAdicScalar) -> float:
    return x.norm()


@dataclass(frozen=True)
class ZpGrid:
    """The p**depth residue classes of Z_p, each of Haar mass p**-depth."""

    p: int
    depth: int

    def __len__(self):
        return self.p**self.depth

    def residues(self) -> range:
        return range(self.p**self.depth)

    @property
    def mass(self) -> float:
        return float(self.p) ** (-self.depth)

    def children(self, residue: int) -> list[int]:
        step = self.p**self.depth
        return [residue + i * step for i in range(self.p)]

    def refine(self) -> "ZpGrid":
        return ZpGrid(self.p, self.depth + 1)


def lift_table(table: Sequence[float], p: int, m: int) -> list[float]:
    """Depth-(m+1) table of a function given at depth m."""
    size = p**m
    if len(table) != size:
        raise ValueError(f"table has {len(table)} entries, expected {size}")
    return [table[s % size] for s in range(size * p)]


TableLike = Union[Sequence[float], Mapping[int, float], Callable[[int], float]]


def _as_table(f: TableLike, p: int, m: int) -> list[float]:
    size = p**m
    if callable(f):
        return [float(f(s)) for s in range(size)]
    if isinstance(f, Mapping):
        if not f:
            raise ValueError("empty table")
        if set(f) != set(range(size)):
            raise ValueError(f"table keys do not cover the {size} residues mod {p}^{m}")
        return [float(f[s]) for s in range(size)]
    if len(f) == 0:
        raise ValueError("empty table")
    if len(f) != size:
        raise ValueError(f"table has {len(f)} entries, expected {size} for depth {m}")
    return [float(v) for v in f]


def haar_integrate(f: TableLike, p: int, m: int, *, check_refinement: bool = False) -> float:
    """Integral over Z_p of a function locally constant at depth ``m``.

    ``f`` is a table indexed by residues mod ``p**m`` (sequence or mapping) or
    a callable on residues.  The sum is correctly rounded (``math.fsum``), so
    the result does not depend on summation order.  With
    ``check_refinement`` and a callable ``f``, local constancy is verified by
    comparing against the depth-(m+1) evaluation.
    """
    values = _as_table(f, p, m)
    if check_refinement:
        if not callable(f):
            raise ValueError("refinement check needs a callable")
        size = p**m
        for s in range(size * p):
            if float(f(s)) != values[s % size]:
                raise ValueError(f"not locally constant at depth {m}: residue {s}")
    return math.fsum(values) / p**m
