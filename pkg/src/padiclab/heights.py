"""S-adic absolute values and heights over Q, integer kernels, and rounding onto kernels.

A place set S is a tuple containing ``"inf"`` and some primes.  All values are
exact ``Fraction`` objects.
"""
from __future__ import annotations

import csv
import io
import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import DomainError, InequalityViolation

INF_PLACE = "inf"


def parse_rational(text: str) -> Fraction:
    """Parse ``"num/den"`` or an integer string."""
    text = text.strip()
    if "/" in text:
        num, den = text.split("/")
        return Fraction(int(num), int(den))
    return Fraction(int(text))


def format_rational(x: Fraction) -> str:
    return f"{x.numerator}/{x.denominator}"


def read_matrix_csv(text: str) -> list[list[int]]:
    rows = [[int(c) for c in row] for row in csv.reader(io.StringIO(text)) if row and not row[0].startswith("#")]
    if rows and len({len(r) for r in rows}) != 1:
        raise ValueError("ragged matrix")
    return rows


def write_matrix_csv(A) -> str:
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(A)
    return buf.getvalue()


def factor(n: int) -> dict[int, int]:
    """Prime factorization of a positive integer by trial division."""
    if n < 1:
        raise ValueError("factor needs a positive integer")
    out: dict[int, int] = {}
    d = 2
    while d * d <= n:
        while n % d == 0:
            out[d] = out.get(d, 0) + 1
            n //= d
        d += 1 if d == 2 else 2
    if n > 1:
        out[n] = out.get(n, 0) + 1
    return out


def valuation_q(x: Fraction, q: int) -> int:
    v = 0
    num, den = x.numerator, x.denominator
    while num % q == 0:
        num //= q
        v += 1
    while den % q == 0:
        den //= q
        v -= 1
    return v


def abs_at(x: Fraction, place) -> Fraction:
    """``|x|_v`` for ``v = "inf"`` or a prime."""
    x = Fraction(x)
    if place == INF_PLACE:
        return abs(x)
    if x == 0:
        return Fraction(0)
    return Fraction(place) ** (-valuation_q(x, place))


def _check_places(S) -> tuple:
    S = tuple(S)
    if INF_PLACE not in S:
        raise ValueError("S must contain the archimedean place 'inf'")
    return S


@dataclass(frozen=True)
class SAdicScalar:
    value: Fraction
    S: tuple

    def __post_init__(self):
        object.__setattr__(self, "value", Fraction(self.value))
        object.__setattr__(self, "S", _check_places(self.S))

    def is_S_integer(self) -> bool:
        den = self.value.denominator
        primes = [q for q in self.S if q != INF_PLACE]
        for q in primes:
            while den % q == 0:
                den //= q
        return den == 1


@dataclass
class HeightRecord:
    S: tuple
    norms: dict
    S_norm: Fraction
    S_height: Fraction
    all_places: dict = field(default_factory=dict)
    all_product: Fraction | None = None
    S_integer: bool = True


def place_norms(x: SAdicScalar) -> HeightRecord:
    """Per-place absolute values, the S-norm (max) and S-height (product).

    For nonzero x also the values at every place where ``|x|_v != 1`` and their
    product, which the product formula forces to be 1.
    """
    norms = {v: abs_at(x.value, v) for v in x.S}
    S_norm = max(norms.values())
    S_height = math.prod(norms.values(), start=Fraction(1))
    rec = HeightRecord(x.S, norms, S_norm, S_height, S_integer=x.is_S_integer())
    if x.value != 0:
        primes = set(factor(abs(x.value.numerator))) | set(factor(x.value.denominator))
        allp = {INF_PLACE: abs(x.value)}
        for q in sorted(primes):
            allp[q] = abs_at(x.value, q)
        rec.all_places = allp
        rec.all_product = math.prod(allp.values(), start=Fraction(1))
        if rec.all_product != 1:
            raise InequalityViolation("product formula fails", {"x": x.value})
    return rec


def s_norm(x: Fraction, S) -> Fraction:
    return max(abs_at(x, v) for v in S)


def inverse_norm_check(x: SAdicScalar, C: Fraction | None = None) -> bool:
    """``||1/x||_S <= C^(#S - 1)`` for a nonzero S-integer with ``||x||_S <= C``."""
    if x.value == 0:
        raise DomainError("x must be nonzero")
    if not x.is_S_integer():
        raise DomainError(f"{x.value} is not an S-integer")
    nx = s_norm(x.value, x.S)
    C = nx if C is None else Fraction(C)
    if nx > C:
        raise DomainError(f"||x||_S = {nx} exceeds C = {C}")
    lhs = s_norm(1 / x.value, x.S)
    rhs = C ** (len(x.S) - 1)
    if lhs > rhs:
        raise InequalityViolation("inverse norm bound fails", {"x": x.value, "lhs": lhs, "rhs": rhs})
    return True


# -- integer kernels -----------------------------------------------------

def _column_hnf_transform(A: list[list[int]], n: int) -> tuple[list[list[int]], list[list[int]], int]:
    """Unimodular U (n x n) with ``A U = [H | 0]``; returns (A U, U, rank)."""
    M = [row[:] for row in A]
    U = [[int(i == j) for j in range(n)] for i in range(n)]

    def col_op(i, j, a, b, c, d):
        # (col_i, col_j) <- (a col_i + b col_j, c col_i + d col_j)
        for R in (M, U):
            for row in R:
                x, y = row[i], row[j]
                row[i], row[j] = a * x + b * y, c * x + d * y

    rank = 0
    for r in range(len(M)):
        if rank == n:
            break
        for j in range(rank + 1, n):
            x, y = M[r][rank], M[r][j]
            if y == 0:
                continue
            g, s, t = _xgcd(x, y)
            # [s t; -y/g x/g] has determinant 1
            col_op(rank, j, s, t, -y // g, x // g)
        if M[r][rank] != 0:
            if M[r][rank] < 0:
                _negate_col(M, U, rank)
            rank += 1
    return M, U, rank


def _negate_col(M, U, i):
    for R in (M, U):
        for row in R:
            row[i] = -row[i]


def _xgcd(a: int, b: int) -> tuple[int, int, int]:
    """``g, s, t`` with ``s a + t b = g = gcd(a, b) > 0``."""
    old_r, r = a, b
    old_s, s = 1, 0
    old_t, t = 0, 1
    while r:
        qt = old_r // r
        old_r, r = r, old_r - qt * r
        old_s, s = s, old_s - qt * s
        old_t, t = t, old_t - qt * t
    if old_r < 0:
        old_r, old_s, old_t = -old_r, -old_s, -old_t
    return old_r, old_s, old_t


def _size_reduce(basis: list[list[int]]) -> list[list[int]]:
    """Pairwise size reduction until no subtraction shortens a vector (Euclidean length)."""
    B = [b[:] for b in basis]

    def dot(u, v):
        return sum(x * y for x, y in zip(u, v))

    changed = True
    while changed:
        changed = False
        B.sort(key=lambda v: (dot(v, v), v))
        for i in range(len(B)):
            for j in range(len(B)):
                if i == j:
                    continue
                nj = dot(B[j], B[j])
                if nj == 0:
                    continue
                mu = round(Fraction(dot(B[i], B[j]), nj))
                if mu:
                    cand = [x - mu * y for x, y in zip(B[i], B[j])]
                    if dot(cand, cand) < dot(B[i], B[i]):
                        B[i] = cand
                        changed = True
    return sorted(B, key=lambda v: (max(map(abs, v)), v))


def integer_kernel_basis(A: Sequence[Sequence[int]], T: int | None = None, n: int | None = None) -> list[list[int]]:
    """Basis of the saturated lattice ``ker(A) cap Z^n``, with every max-norm at most ``T^(3n)``.

    ``T`` defaults to ``max(2, max |A_ij|)``.
    """
    A = [list(map(int, row)) for row in A]
    n = n if n is not None else (len(A[0]) if A else 0)
    entry_max = max((abs(x) for row in A for x in row), default=0)
    if T is None:
        T = max(2, entry_max)
    elif entry_max > T:
        raise DomainError(f"entries of A exceed T = {T}")
    _, U, rank = _column_hnf_transform(A, n)
    basis = [[U[i][j] for i in range(n)] for j in range(rank, n)]
    basis = _size_reduce(basis)
    for b in basis:
        if any(sum(a * x for a, x in zip(row, b)) for row in A):
            raise AssertionError("kernel vector is not in the kernel")
        if max(map(abs, b)) > T ** (3 * n):
            raise InequalityViolation("kernel basis norm exceeds T^(3n)", {"A": A, "vector": b, "T": T})
    return basis


def _bareiss_det(M: list[list[int]]) -> int:
    M = [row[:] for row in M]
    k = len(M)
    if k == 0:
        return 1
    sign, prev = 1, 1
    for i in range(k - 1):
        if M[i][i] == 0:
            swap = next((r for r in range(i + 1, k) if M[r][i] != 0), None)
            if swap is None:
                return 0
            M[i], M[swap] = M[swap], M[i]
            sign = -sign
        for r in range(i + 1, k):
            for c in range(i + 1, k):
                M[r][c] = (M[r][c] * M[i][i] - M[r][i] * M[i][c]) // prev
        prev = M[i][i]
    return sign * M[-1][-1]


def is_saturated(basis: list[list[int]], n: int) -> bool:
    """gcd of the maximal minors of the basis matrix equals 1."""
    if not basis:
        return True
    k = len(basis)
    g = 0
    for cols in itertools.combinations(range(n), k):
        g = math.gcd(g, _bareiss_det([[b[c] for c in cols] for b in basis]))
        if g == 1:
            return True
    return g == 1


# -- nearest kernel point ------------------------------------------------

def independent_rows(A) -> list[list[Fraction]]:
    rows = []
    echelon: list[list[Fraction]] = []
    for row in A:
        v = [Fraction(x) for x in row]
        red = v[:]
        for e in echelon:
            piv = next(i for i, x in enumerate(e) if x != 0)
            if red[piv] != 0:
                f = red[piv] / e[piv]
                red = [a - f * b for a, b in zip(red, e)]
        if any(red):
            echelon.append(red)
            rows.append(v)
    return rows


@dataclass
class KernelRounding:
    w0: list
    distance: float
    C_A: float
    residual: float


def _solve(M: list[list[Fraction]], y: list[Fraction]) -> list[Fraction]:
    k = len(M)
    aug = [row[:] + [y[i]] for i, row in enumerate(M)]
    for i in range(k):
        piv = next(r for r in range(i, k) if aug[r][i] != 0)
        aug[i], aug[piv] = aug[piv], aug[i]
        for r in range(k):
            if r != i and aug[r][i] != 0:
                f = aug[r][i] / aug[i][i]
                aug[r] = [a - f * b for a, b in zip(aug[r], aug[i])]
    return [aug[i][k] / aug[i][i] for i in range(k)]


def nearest_kernel_point(A, w, delta: float | None = None) -> KernelRounding:
    """Orthogonal projection of w onto ker(A), exact in rational arithmetic.

    ``||w - w0||_2 <= C(A) ||A w||_2`` with ``C(A) = 1/sigma_min`` of a maximal
    independent row set; when ``delta`` is given, ``||A w|| <= delta`` is required.
    """
    wf = [Fraction(x) for x in w]
    R = independent_rows(A)
    Aw = [sum(Fraction(a) * x for a, x in zip(row, wf)) for row in A]
    res = math.sqrt(float(sum(x * x for x in Aw)))
    if delta is not None and res > delta * (1 + 1e-12):
        raise DomainError(f"||A w|| = {res} exceeds delta = {delta}")
    if not R:
        return KernelRounding(wf, 0.0, 0.0, 0.0)
    Rw = [sum(a * x for a, x in zip(row, wf)) for row in R]
    G = [[sum(a * b for a, b in zip(r1, r2)) for r2 in R] for r1 in R]
    lam = _solve(G, Rw)
    w0 = [x - sum(lam[i] * R[i][j] for i in range(len(R))) for j, x in enumerate(wf)]
    if any(sum(Fraction(a) * x for a, x in zip(row, w0)) for row in A):
        raise AssertionError("projection is not in the kernel")
    dist = math.sqrt(float(sum((a - b) ** 2 for a, b in zip(wf, w0))))
    sv = np.linalg.svd(np.array([[float(x) for x in row] for row in R]), compute_uv=False)
    C_A = 1.0 / float(sv.min())
    bound = C_A * (delta if delta is not None else res)
    if dist > bound * (1 + 1e-9) + 1e-300:
        raise InequalityViolation("kernel rounding distance exceeds C(A) delta", {"dist": dist, "bound": bound})
    return KernelRounding(w0, dist, C_A, res)
