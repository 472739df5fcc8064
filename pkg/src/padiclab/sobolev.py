"""Sobolev norms on the finite quotient SL2(Z/p^n) through congruence averaging.

Elements are stored in lexicographic order of ``(a, b, c, d)`` with entries in
``[0, p^n)``; that order is the stable element index used by CSV files.  The
measure is normalized counting measure, so ``||f||_2^2`` is the mean of ``f^2``.
"""
from __future__ import annotations

import io
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InequalityViolation

# Smallest d for which the supremum bound is part of the contract (dim SL2 + 2).
D0 = 5


def sl2_order(p: int, n: int) -> int:
    """``|SL2(Z/p^n)| = p^(3n) (1 - p^-2)`` (1 for n = 0)."""
    if n == 0:
        return 1
    return p ** (3 * n - 2) * (p * p - 1)


class FiniteQuotient:
    """SL2(Z/p^n) with its congruence filtration ``K[m] = ker(reduction mod p^m)``."""

    def __init__(self, p: int, n: int):
        if n < 1:
            raise ValueError("level must be positive")
        self.p, self.n = p, n
        q = self.q = p**n
        a, b, c, d = np.meshgrid(*(np.arange(q, dtype=np.int64),) * 4, indexing="ij")
        mask = (a * d - b * c) % q == 1
        self.elements = np.stack([a[mask], b[mask], c[mask], d[mask]], axis=1)
        if len(self.elements) != sl2_order(p, n):
            raise AssertionError("element count does not match |SL2(Z/p^n)|")
        self.size = len(self.elements)
        self._lookup = np.full(q**4, -1, dtype=np.int64)
        self._lookup[self._encode(self.elements)] = np.arange(self.size)
        # coset labels for each level
        self.labels = []
        self.counts = []
        for m in range(n + 1):
            red = self.elements % (p**m)
            key = self._encode(red, p**m)
            _, lab, cnt = np.unique(key, return_inverse=True, return_counts=True)
            self.labels.append(lab.ravel())
            self.counts.append(cnt)

    def _encode(self, arr, q=None):
        q = self.q if q is None else q
        return ((arr[:, 0] * q + arr[:, 1]) * q + arr[:, 2]) * q + arr[:, 3]

    def index(self, g) -> int:
        a, b, c, d = (int(x) % self.q for x in g)
        idx = int(self._lookup[((a * self.q + b) * self.q + c) * self.q + d])
        if idx < 0:
            raise ValueError(f"{g} is not in SL2(Z/{self.q})")
        return idx

    def n_cosets(self, m: int) -> int:
        return len(self.counts[m])

    def kernel_size(self, m: int) -> int:
        return self.size // self.n_cosets(m)

    def in_level(self, i: int, r: int) -> bool:
        """Element ``i`` lies in ``K[r]``."""
        a, b, c, d = (int(x) for x in self.elements[i])
        q = self.p**r
        return a % q == 1 % q and b % q == 0 and c % q == 0 and d % q == 1 % q

    def level_elements(self, r: int) -> np.ndarray:
        return np.array([i for i in range(self.size) if self.in_level(i, r)], dtype=np.int64)

    def left_translate_perm(self, g_index: int) -> np.ndarray:
        """Index of ``g^-1 x`` for every x, so ``(g.f)(x) = f[perm[x]]``."""
        a, b, c, d = (int(x) for x in self.elements[g_index])
        ai, bi, ci, di = d, -b, -c, a
        X = self.elements
        q = self.q
        prod = np.stack([
            (ai * X[:, 0] + bi * X[:, 2]) % q,
            (ai * X[:, 1] + bi * X[:, 3]) % q,
            (ci * X[:, 0] + di * X[:, 2]) % q,
            (ci * X[:, 1] + di * X[:, 3]) % q,
        ], axis=1)
        return self._lookup[self._encode(prod)]

    def random_function(self, rng) -> "QuotientFunction":
        return QuotientFunction(self, rng.standard_normal(self.size))


@dataclass
class QuotientFunction:
    G: FiniteQuotient
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.G.size,):
            raise ValueError("value table does not match the group size")

    def _same(self, other):
        if other.G is not self.G:
            raise ValueError("functions live on different quotients")

    def __add__(self, o):
        self._same(o)
        return QuotientFunction(self.G, self.values + o.values)

    def __sub__(self, o):
        self._same(o)
        return QuotientFunction(self.G, self.values - o.values)

    def __mul__(self, o):
        if isinstance(o, QuotientFunction):
            self._same(o)
            return QuotientFunction(self.G, self.values * o.values)
        return QuotientFunction(self.G, self.values * o)

    __rmul__ = __mul__

    def inner(self, o) -> float:
        self._same(o)
        return math.fsum(self.values * o.values) / self.G.size

    def l2(self) -> float:
        return math.sqrt(self.inner(self))

    def sup(self) -> float:
        return float(np.max(np.abs(self.values)))

    def translate(self, g_index: int) -> "QuotientFunction":
        """``(g.f)(x) = f(g^-1 x)``."""
        return QuotientFunction(self.G, self.values[self.G.left_translate_perm(g_index)])

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(f"# p={self.G.p} n={self.G.n}\n")
        for i, v in enumerate(self.values):
            buf.write(f"{i},{float(v)!r}\n")
        return buf.getvalue()

    @classmethod
    def from_csv(cls, G: FiniteQuotient, text: str) -> "QuotientFunction":
        vals = np.zeros(G.size)
        seen = 0
        for line in text.splitlines():
            if not line or line.startswith("#"):
                continue
            i, v = line.split(",")
            vals[int(i)] = float(v)
            seen += 1
        if seen != G.size:
            raise ValueError(f"expected {G.size} rows, got {seen}")
        return cls(G, vals)


def avg_project(f: QuotientFunction, m: int) -> QuotientFunction:
    """Mean of f over the K[m]-coset of each point."""
    G = f.G
    if not 0 <= m <= G.n:
        raise ValueError(f"level {m} outside [0, {G.n}]")
    lab = G.labels[m]
    means = np.bincount(lab, weights=f.values) / G.counts[m]
    return QuotientFunction(G, means[lab])


def pr_project(f: QuotientFunction, m: int) -> QuotientFunction:
    """``pr[m] = Av[m] - Av[m-1]`` with ``pr[0] = Av[0]``."""
    if m == 0:
        return avg_project(f, 0)
    return avg_project(f, m) - avg_project(f, m - 1)


def sobolev_norm(f: QuotientFunction, d: float) -> float:
    """``(sum_m p^(m d) ||pr[m] f||_2^2)^(1/2)``."""
    if d < 0:
        raise ValueError("d must be >= 0")
    G = f.G
    terms = [float(G.p) ** (m * d) * pr_project(f, m).inner(pr_project(f, m)) for m in range(G.n + 1)]
    return math.sqrt(math.fsum(terms))


@dataclass
class SobolevConstants:
    """Explicit constants for the quotient model.

    With ``N_m`` cosets of ``K[m]`` a K[m]-invariant h has ``||h||_inf <= N_m^(1/2) ||h||_2``.
    Cauchy-Schwarz over the levels then gives
      C1 = (sum_m N_m p^(-m d))^(1/2)                       for ||f||_inf <= C1 S_d(f),
      C3 = max_r 2 p^r (sum_{m>r} N_m p^(-m d))^(1/2)       for ||g.f - f||_inf <= C3 p^-r S_d(f), g in K[r],
      C4 = 2 C1 (1 - p^-d)^(-1/2)                           for S_d(f1 f2) <= C4 S_d(f1) S_d(f2).
    C4 comes from ``pr[m](f1 f2) = pr[m](f1 T_m f2 + T_m f1 Av[m-1] f2)`` with
    ``T_m = 1 - Av[m-1]``, the sup bound, and ``sum_{m<=j} p^(m d) <= p^(j d)/(1 - p^-d)``.
    """

    C1: float
    C3: float
    C4: float
    tail: list = field(default_factory=list)


def derived_constants(G: FiniteQuotient, d: float) -> SobolevConstants:
    p, n = G.p, G.n
    N = [G.n_cosets(m) for m in range(n + 1)]
    C1 = math.sqrt(math.fsum(N[m] * float(p) ** (-m * d) for m in range(n + 1)))
    tail = [2 * math.sqrt(math.fsum(N[m] * float(p) ** (-m * d) for m in range(r + 1, n + 1))) for r in range(n + 1)]
    C3 = max(float(p) ** r * tail[r] for r in range(n + 1))
    C4 = 2 * C1 / math.sqrt(1 - float(p) ** (-d))
    return SobolevConstants(C1, C3, C4, tail)


@dataclass
class PropertyReport:
    d: float
    r: int
    constants: SobolevConstants
    s1: tuple
    s2: tuple
    s3: tuple
    s4: tuple
    enforced: bool

    @property
    def ok(self) -> bool:
        return all(x[-1] for x in (self.s1, self.s2, self.s3, self.s4))


def verify_properties(f: QuotientFunction, f2: QuotientFunction, g_index: int, d: float, r: int, *,
                      tol: float = 1e-12, raise_on_fail: bool = True) -> PropertyReport:
    """Check the four Sobolev properties for one (f, f2, g) triple; ``g`` must lie in ``K[r]``.

    Each entry is ``(lhs, rhs, ok)``.  S2 is an equality and is always checked;
    the others are enforced only for ``d >= D0``.
    """
    G = f.G
    if not G.in_level(g_index, r):
        raise ValueError(f"g is not in K[{r}]")
    c = derived_constants(G, d)
    Sf, Sf2 = sobolev_norm(f, d), sobolev_norm(f2, d)
    gf = f.translate(g_index)
    s1 = (f.sup(), c.C1 * Sf)
    s2 = (sobolev_norm(gf, d), Sf)
    s3 = ((gf - f).sup(), c.C3 * float(G.p) ** (-r) * Sf)
    s4 = (sobolev_norm(f * f2, d), c.C4 * Sf * Sf2)
    slack = 1 + 1e-12
    res1 = (*s1, s1[0] <= s1[1] * slack)
    res2 = (*s2, abs(s2[0] - s2[1]) <= tol * max(1.0, abs(s2[1])))
    res3 = (*s3, s3[0] <= s3[1] * slack + tol)
    res4 = (*s4, s4[0] <= s4[1] * slack)
    enforced = d >= D0
    rep = PropertyReport(d, r, c, res1, res2, res3, res4, enforced)
    if raise_on_fail:
        failed = [name for name, x in zip(("S1", "S2", "S3", "S4"), (res1, res2, res3, res4))
                  if not x[-1] and (enforced or name == "S2")]
        if failed:
            raise InequalityViolation(f"Sobolev properties failed: {failed}", {"report": rep})
    return rep
