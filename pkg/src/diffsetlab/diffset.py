"""Counting polynomial configurations in difference sets, and extremal search."""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, NamedTuple

import numpy as np

from .core import (
    LabConstants,
    PointSet,
    PolynomialFamily,
    as_fraction,
    monomial_point,
    shifted_overlap,
)

__all__ = [
    "MonomialCurveWindow",
    "ConfigWitness",
    "admissible_d_max",
    "has_polynomial_configuration",
    "count_monomial_differences",
    "monomial_overlaps",
    "find_monomial_witness",
    "randomness_defect",
    "greedy_free_set",
    "max_free_set_exact",
    "density_bound_thm1",
]


@dataclass(frozen=True)
class MonomialCurveWindow:
    """S = {(d, d^2, ..., d^k) : 1 <= d <= floor(eps M)}."""

    eps: Fraction
    M: int
    k: int

    @property
    def length(self) -> int:
        return math.floor(as_fraction(self.eps) * self.M)

    def points(self) -> list[tuple[int, ...]]:
        return [monomial_point(d, self.k) for d in range(1, self.length + 1)]

    def __len__(self):
        return self.length


@dataclass(frozen=True)
class ConfigWitness:
    """A nonzero d together with pairs (a, a') from A, a - a' = P_i(d) for each i."""

    d: int
    pairs: tuple[tuple[int, int], ...]

    def verify(self, P: PolynomialFamily) -> bool:
        vals = P.evaluate(self.d)
        return self.d != 0 and len(vals) == len(self.pairs) and all(
            a - b == v for (a, b), v in zip(self.pairs, vals)
        )


def admissible_d_max(P: PolynomialFamily, N: int) -> int:
    """Largest |d| for which every |P_i(+-d)| <= N - 1 can still hold.

    For |d| past this value some P_i(d) always leaves [-(N-1), N-1], so no
    configuration inside [1, N] can use it.  Returns 0 when no d >= 1 qualifies.
    """
    # guaranteed cut-off from the dominant row: |c_k| d^k - sum_{j<k}|c_j| d^j >= |c_k| d - S
    row = next(r for r in P.coeffs if r[-1] != 0)
    S = sum(abs(c) for c in row[:-1])
    cutoff = (N + S) // abs(row[-1]) + 1
    best = 0
    for d in range(1, cutoff + 1):
        if any(max(abs(v) for v in P.evaluate(s)) <= N - 1 for s in (d, -d)):
            best = d
    return best


def _pair_with_difference(A: list[int], Aset: set[int], v: int):
    for a2 in A:
        if a2 + v in Aset:
            return (a2 + v, a2)
    return None


def has_polynomial_configuration(
    A: Iterable[int], P: PolynomialFamily, d_max: int | None = None, N: int | None = None
) -> ConfigWitness | None:
    """Least |d| >= 1 (positive sign first) with every P_i(d) in A - A, or None."""
    if d_max is not None and d_max <= 0:
        raise ValueError(f"d_max={d_max} must be positive")
    A = sorted({int(a) for a in A})
    if not A:
        return None
    if N is None:
        N = A[-1]
    if d_max is None:
        d_max = max(admissible_d_max(P, N), 1)
    Aset = set(A)
    span = A[-1] - A[0]
    for d in range(1, d_max + 1):
        for s in (d, -d):
            vals = P.evaluate(s)
            if any(abs(v) > span for v in vals):
                continue
            pairs = []
            for v in vals:
                pair = _pair_with_difference(A, Aset, v)
                if pair is None:
                    break
                pairs.append(pair)
            else:
                return ConfigWitness(s, tuple(pairs))
    return None


def _window(B: PointSet, eps) -> int:
    eps = as_fraction(eps)
    if eps <= 0:
        raise ValueError("eps must be positive")
    return min(math.floor(eps * B.M), B.M)


def monomial_overlaps(B: PointSet, D: int) -> np.ndarray:
    """Array whose (d-1)-th entry is |B intersect (B + (d, ..., d^k))| for d = 1..D."""
    mask = B.mask
    return np.array([shifted_overlap(mask, mask, monomial_point(d, B.k)) for d in range(1, D + 1)], dtype=np.int64)


def count_monomial_differences(B: PointSet, eps=1, backend: str = "direct") -> int:
    """sum_{d=1}^{floor(eps M)} |B intersect (B + (d, d^2, ..., d^k))|.

    ``backend="direct"`` shifts the indicator array once per d; ``"fft"`` reads
    the same numbers off an FFT autocorrelation.  Both are exact.
    """
    if B.mode != "box":
        raise ValueError("counting needs a box-mode set")
    D = _window(B, eps)
    if B.cardinality == 0 or D == 0:
        return 0
    if backend == "direct":
        return int(monomial_overlaps(B, D).sum())
    if backend == "fft":
        from .fourier import autocorrelation

        corr = autocorrelation(B.mask)
        T = corr.shape
        d = np.arange(1, D + 1, dtype=np.int64)
        idx = tuple((d**j) % T[j - 1] for j in range(1, B.k + 1))
        return int(np.rint(corr[idx]).astype(np.int64).sum())
    raise ValueError(f"unknown backend {backend!r}")


def find_monomial_witness(B: PointSet, D: int | None = None) -> tuple[int, tuple, tuple] | None:
    """Least d >= 1 with (d, ..., d^k) in B - B, plus a verifying pair (b, b')."""
    D = B.M if D is None else D
    pts = {p for p in B.as_tuples()}
    for d in range(1, D + 1):
        v = monomial_point(d, B.k)
        for b in B.as_tuples():
            b2 = tuple(x - y for x, y in zip(b, v))
            if b2 in pts:
                return d, b, b2
    return None


class RandomnessReport(NamedTuple):
    count: int
    threshold: Fraction
    is_random: bool


def randomness_defect(B: PointSet, consts: LabConstants) -> RandomnessReport:
    """Full-range monomial count against (eps/4) delta |B| M."""
    if B.cardinality == 0:
        raise ValueError("density of an empty set is undefined here")
    count = count_monomial_differences(B, 1)
    threshold = consts.eps / 4 * B.density * B.cardinality * B.M
    return RandomnessReport(count, threshold, count >= threshold)


# ---------------------------------------------------------------------------
# extremal configuration-free sets


def _needs(P: PolynomialFamily, N: int) -> list[frozenset[int]]:
    """For each admissible d != 0, the absolute values that must all lie in A - A."""
    out = set()
    for d in range(1, admissible_d_max(P, N) + 1):
        for s in (d, -d):
            vals = P.evaluate(s)
            if max(abs(v) for v in vals) <= N - 1:
                out.add(frozenset(abs(v) for v in vals) - {0})
    return sorted(out, key=lambda s: (len(s), sorted(s)))


def greedy_free_set(N: int, P: PolynomialFamily) -> list[int]:
    """Scan 1..N, keeping n unless it completes a forbidden configuration."""
    if N < 1:
        raise ValueError("N must be positive")
    needs = _needs(P, N)
    if any(len(s) == 0 for s in needs):
        return []
    A: list[int] = []
    diffs: set[int] = set()
    for n in range(1, N + 1):
        new = diffs | {n - a for a in A}
        if not any(s <= new for s in needs):
            A.append(n)
            diffs = new
    return A


class ExtremalResult(NamedTuple):
    size: int
    witness: tuple[int, ...]
    exact: bool
    nodes: int


class _BudgetExhausted(Exception):
    pass


def max_free_set_exact(N: int, P: PolynomialFamily, budget: int = 5_000_000) -> ExtremalResult:
    """Largest P-configuration-free subset of [1, N] by branch and bound.

    Elements are decided in increasing order, include-branch first, and the
    incumbent is only replaced by a strictly larger set, so the returned
    witness is the lexicographically least maximum set.  If the node budget
    runs out, the best set so far is returned with ``exact=False``.
    """
    if N < 1:
        return ExtremalResult(0, (), True, 0)
    needs = _needs(P, N)
    if any(len(s) == 0 for s in needs):
        return ExtremalResult(0, (), True, 0)
    if all(len(s) == 1 for s in needs):
        return _mis_pairwise(N, {next(iter(s)) for s in needs}, budget)
    return _bnb_general(N, needs, budget)


def _mis_pairwise(N: int, forbidden: set[int], budget: int) -> ExtremalResult:
    # bit i stands for the integer i + 1
    adj = [0] * N
    for i in range(N):
        for t in forbidden:
            for j in (i - t, i + t):
                if 0 <= j < N:
                    adj[i] |= 1 << j
    best = [0, 0]  # size, bitset
    nodes = 0

    def clique_cover(cand: int) -> int:
        # greedy cover by cliques of the conflict graph; an independent set uses one vertex per clique
        cliques: list[int] = []  # common neighbourhood of each clique
        while cand:
            v = (cand & -cand).bit_length() - 1
            cand &= cand - 1
            for idx, common in enumerate(cliques):
                if common >> v & 1:
                    cliques[idx] = common & adj[v]
                    break
            else:
                cliques.append(adj[v])
        return len(cliques)

    def rec(cur: int, size: int, cand: int):
        nonlocal nodes
        nodes += 1
        if nodes > budget:
            raise _BudgetExhausted
        if cand == 0:
            if size > best[0]:
                best[0], best[1] = size, cur
            return
        if size + bin(cand).count("1") <= best[0]:
            return
        if size + clique_cover(cand) <= best[0]:
            return
        low = cand & -cand
        v = low.bit_length() - 1
        rec(cur | low, size + 1, cand & ~adj[v] & ~low)
        rec(cur, size, cand & ~low)

    exact = True
    try:
        rec(0, 0, (1 << N) - 1)
    except _BudgetExhausted:
        exact = False
    wit = tuple(i + 1 for i in range(N) if best[1] >> i & 1)
    return ExtremalResult(best[0], wit, exact, nodes)


def _bnb_general(N: int, needs: list[frozenset[int]], budget: int) -> ExtremalResult:
    best: list = [0, ()]
    nodes = 0

    def rec(n: int, cur: list[int], diffs: frozenset):
        nonlocal nodes
        nodes += 1
        if nodes > budget:
            raise _BudgetExhausted
        if len(cur) + (N - n + 1) <= best[0]:
            return
        if n > N:
            if len(cur) > best[0]:
                best[0], best[1] = len(cur), tuple(cur)
            return
        new = diffs | {n - a for a in cur}
        if not any(s <= new for s in needs):
            cur.append(n)
            rec(n + 1, cur, new)
            cur.pop()
        rec(n + 1, cur, diffs)

    exact = True
    try:
        rec(1, [], frozenset())
    except _BudgetExhausted:
        exact = False
    return ExtremalResult(best[0], best[1], exact, nodes)


def density_bound_thm1(N, P: PolynomialFamily, C=1) -> float:
    """C (log log N / log N)^(1/(l(k-1)))."""
    if N < 16:
        raise ValueError(f"N={N} < 16 is outside the domain (need log log N > 0 comfortably)")
    x = math.log(N)
    return float(C) * (math.log(x) / x) ** (1.0 / (P.ell * (P.k - 1)))
