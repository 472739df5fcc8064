"""Finite point sets in Z_p^d, their ball tree, and non-concentration statistics.

Points are tuples of residues mod p^m.  The ball of radius p^-k around a point
is the set of points agreeing with it mod p^k, so every ball that meets the
set is a node of the tree built from residue prefixes.
"""
from __future__ import annotations

import csv
import io
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import DomainError, SizeConditionError


@dataclass(frozen=True)
class PointSet:
    p: int
    d: int
    m: int
    points: tuple

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("dimension must be positive")
        q = self.p ** self.m
        pts = tuple(tuple(int(c) for c in pt) for pt in self.points)
        for pt in pts:
            if len(pt) != self.d:
                raise ValueError(f"point {pt} does not have {self.d} coordinates")
            if any(c < 0 or c >= q for c in pt):
                raise ValueError(f"point {pt} has a coordinate outside [0, p^m)")
        if len(set(pts)) != len(pts):
            raise DomainError("duplicate residues: distances between coincident points are undefined")
        object.__setattr__(self, "points", pts)

    @classmethod
    def from_points(cls, p: int, m: int, points: Iterable[Sequence[int]], d: int | None = None) -> "PointSet":
        pts = [tuple(int(c) % p**m for c in pt) for pt in points]
        if d is None:
            if not pts:
                raise ValueError("cannot infer the dimension of an empty set")
            d = len(pts[0])
        return cls(p, d, m, tuple(pts))

    def __len__(self):
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    def as_array(self) -> np.ndarray:
        return np.array(self.points, dtype=np.int64).reshape(len(self.points), self.d)

    def distance_exponent(self, x, y) -> int:
        """Largest k <= m with x = y mod p^k, so ``||x - y|| = p^-k`` (``<= p^-m`` when k = m)."""
        k = self.m
        for a, b in zip(x, y):
            diff = (a - b) % self.p**self.m
            if diff:
                v = 0
                while diff % self.p == 0:
                    diff //= self.p
                    v += 1
                k = min(k, v)
        return k

    def subset(self, pts: Iterable[Sequence[int]]) -> "PointSet":
        return PointSet(self.p, self.d, self.m, tuple(pts))

    # -- CSV -------------------------------------------------------------
    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(f"# p={self.p} m={self.m} d={self.d}\n")
        w = csv.writer(buf, lineterminator="\n")
        for pt in sorted(self.points):
            w.writerow(pt)
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "PointSet":
        lines = text.splitlines()
        if not lines or not lines[0].startswith("#"):
            raise ValueError("missing header line '# p=.. m=..'")
        header = dict(tok.split("=") for tok in lines[0][1:].split())
        p, m = int(header["p"]), int(header["m"])
        rows = [tuple(int(c) for c in row) for row in csv.reader(lines[1:]) if row]
        d = int(header["d"]) if "d" in header else (len(rows[0]) if rows else 1)
        return cls(p, d, m, tuple(rows))


class PBallTree:
    """Counts of points per ball, one Counter per level ``k = 0..m``."""

    def __init__(self, E: PointSet):
        if len(E) == 0:
            raise ValueError("cannot build a tree over an empty set")
        self.E = E
        self.p, self.m, self.d = E.p, E.m, E.d
        self.levels: list[Counter] = []
        for k in range(self.m + 1):
            q = self.p**k
            self.levels.append(Counter(tuple(c % q for c in pt) for pt in E.points))

    @property
    def size(self) -> int:
        return len(self.E)

    def key(self, center, k: int) -> tuple:
        q = self.p**k
        return tuple(int(c) % q for c in center)

    def count(self, center, k: int) -> int:
        if not 0 <= k <= self.m:
            raise ValueError(f"scale {k} outside [0, {self.m}]")
        return self.levels[k].get(self.key(center, k), 0)

    def children(self, k: int, key: tuple) -> dict:
        """Nonempty children at level k+1 of the level-k node ``key``."""
        q = self.p**k
        return {c: n for c, n in self.levels[k + 1].items() if tuple(x % q for x in c) == key}

    def max_count(self, k: int) -> int:
        return max(self.levels[k].values())

    def nodes(self, k: int):
        return sorted(self.levels[k].items())


def build_tree(E: PointSet) -> PBallTree:
    return PBallTree(E)


def ball_count(tree: PBallTree, center, k: int) -> int:
    """Exact number of points within ``p^-k`` of ``center``."""
    return tree.count(center, k)


@dataclass
class NonConcProfile:
    p: int
    l0: int
    l1: int
    size: int
    max_counts: dict = field(default_factory=dict)
    alpha: float = 0.0
    D: float = 1.0

    def ratio(self, k: int) -> float:
        return self.max_counts[k] / self.size

    def constant_at(self, alpha: float) -> float:
        """Smallest D with ``max ratio at scale k <= D (p^-(k - l1))^alpha`` on the profiled range."""
        return max(self.ratio(k) * self.p ** (alpha * (k - self.l1)) for k in self.max_counts)


def non_concentration_profile(E: PointSet | PBallTree, l0: int, l1: int, alpha: float | None = None) -> NonConcProfile:
    """Max ball counts at radii ``p^-k`` for ``l1 <= k <= l0``.

    Without ``alpha`` the exponent is fitted as the largest one for which the
    bound holds with ``D = 1`` at the coarse scale, and D is then minimal for it.
    """
    tree = E if isinstance(E, PBallTree) else PBallTree(E)
    if not 0 <= l1 <= l0 <= tree.m:
        raise ValueError(f"need 0 <= l1 <= l0 <= m, got l1={l1}, l0={l0}")
    counts = {k: tree.max_count(k) for k in range(l1, l0 + 1)}
    prof = NonConcProfile(tree.p, l0, l1, tree.size, counts)
    if alpha is None:
        base = prof.ratio(l1)
        slopes = [math.log(base / prof.ratio(k), tree.p) / (k - l1) for k in counts if k > l1]
        alpha = max(0.0, min(slopes)) if slopes else 0.0
        if abs(alpha - round(alpha)) < 1e-12:
            alpha = float(round(alpha))
    prof.alpha = alpha
    prof.D = prof.constant_at(alpha)
    return prof


def energy_sum(F: PointSet | PBallTree, alpha: float, w) -> float:
    """``sum_{w' != w} ||w' - w||^-alpha`` grouped by distance shells."""
    tree = F if isinstance(F, PBallTree) else PBallTree(F)
    counts = [tree.count(w, k) for k in range(tree.m + 1)]
    if counts[-1] == 0:
        raise DomainError("w is not a point of F")
    if counts[-1] > 1:
        raise DomainError("coincident points: distance unresolvable at this depth")
    terms = [(counts[k] - counts[k + 1]) * float(tree.p) ** (alpha * k) for k in range(tree.m)]
    return math.fsum(terms)


def ball_scan_max_counts(E: PointSet, kmax: int) -> dict:
    """Max ball counts for ``k = 0..kmax`` by direct residue grouping (independent of the tree)."""
    arr = E.as_array()
    out = {}
    for k in range(kmax + 1):
        red = arr % (E.p**k)
        _, cnt = np.unique(red, axis=0, return_counts=True)
        out[k] = int(cnt.max())
    return out


@dataclass
class RegularizationResult:
    w0: tuple
    l1: int
    b1: float
    F_prime: PointSet
    C_prime: float
    exponent: float
    l1_range: tuple
    scan_max_counts: dict

    @property
    def postcondition_ok(self) -> bool:
        return math.isfinite(self.C_prime) and self.l1_range[0] <= self.l1 <= self.l1_range[1]


def size_condition(n: int, eps: float, p: int) -> bool:
    """``n^(eps/2) > 4 log_p n``."""
    return n > 1 and n ** (eps / 2) > 4 * math.log(n, p)


def admissible_scales(n: int, alpha: float, eps: float, p: int, m: int) -> tuple[int, int]:
    """Integer range of l1 with ``n^-((3-a+5e)/(3-a+20e)) <= p^-l1 <= n^-e``; may be empty."""
    L = math.log(n, p)
    lo = math.ceil(eps * L - 1e-12)
    hi = math.floor(L * (3 - alpha + 5 * eps) / (3 - alpha + 20 * eps) + 1e-12)
    return lo, min(hi, m)


def bourgain_regularize(F: PointSet, alpha: float, eps: float, D: float, *, check_size: bool = True) -> RegularizationResult:
    """Localize F to a ball ``B(w0, p^-l1)`` on which it is regular at exponent ``alpha - 20 eps``.

    For each admissible l1 the heaviest level-l1 ball is a candidate; the one
    with the smallest measured constant C' wins.  The returned constant comes
    from a direct ball scan over all radii ``b >= 1/#F``.
    """
    n = len(F)
    if check_size and not size_condition(n, eps, F.p):
        raise SizeConditionError(f"#F={n} too small for eps={eps}: need #F^(eps/2) > 4 log_p #F")
    tree = PBallTree(F)
    worst = max(energy_sum(tree, alpha, w) for w in F.points)
    if worst > D * n ** (1 + eps) * (1 + 1e-9):
        raise DomainError(f"energy bound fails: max energy {worst} > D #F^(1+eps)")
    lo, hi = admissible_scales(n, alpha, eps, F.p, F.m)
    if lo > hi:
        raise SizeConditionError(f"no admissible scale: l1 range [{lo}, {hi}] is empty for #F={n}")
    s = alpha - 20 * eps
    kmax = min(F.m, math.floor(math.log(n, F.p) + 1e-12))
    best = None
    for l1 in range(lo, hi + 1):
        key, cnt = max(tree.nodes(l1), key=lambda kv: (kv[1], tuple(-c for c in kv[0])))
        sub = F.subset(pt for pt in F.points if tree.key(pt, l1) == key)
        scan = ball_scan_max_counts(sub, kmax)
        cp = max(scan[k] / len(sub) * F.p ** (s * (k - l1)) for k in scan)
        if best is None or cp < best[0]:
            best = (cp, l1, sub, scan)
    cp, l1, sub, scan = best
    return RegularizationResult(
        w0=min(sub.points), l1=l1, b1=float(F.p) ** (-l1), F_prime=sub, C_prime=cp,
        exponent=s, l1_range=(lo, hi), scan_max_counts=scan,
    )
