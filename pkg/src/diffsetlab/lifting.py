"""Lifting a polynomial family to the monomial curve, and the sumset pigeonhole.

A family P_1..P_l with coefficient matrix C (l x k) acts on Z^k by b -> C b.
If b - b' = (d, ..., d^k) then C b - C b' = (P_1(d), ..., P_l(d)), so a set of
b whose images land in a product of copies of A turns monomial differences
into configurations in A - A.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np
import sympy

from .core import PointSet, PolynomialFamily, monomial_point
from .diffset import admissible_d_max

__all__ = [
    "LiftDecomposition",
    "EmptyFiberError",
    "ReductionDegenerateError",
    "decompose",
    "lattice_index",
    "shift_search",
    "LiftResult",
    "build_lifted_set",
    "lifted_monomial_difference",
    "translate_to_positive",
    "SumsetResult",
    "sumset_reduce",
]


class EmptyFiberError(ValueError):
    pass


class ReductionDegenerateError(ValueError):
    pass


def _frac(x) -> Fraction:
    x = sympy.Rational(x)
    return Fraction(int(x.p), int(x.q))


@dataclass(frozen=True)
class LiftDecomposition:
    """Independent rows R (selected greedily by index) and D with dependent rows = D R."""

    P: PolynomialFamily
    r: int
    selection: tuple[int, ...]
    dependent: tuple[int, ...]
    D: tuple[tuple[Fraction, ...], ...]

    @property
    def R(self) -> np.ndarray:
        return np.array([self.P.coeffs[i] for i in self.selection], dtype=np.int64)

    def R_apply(self, b: Sequence[int]) -> tuple[int, ...]:
        return tuple(sum(c * x for c, x in zip(self.P.coeffs[i], b)) for i in self.selection)

    def D_apply(self, y: Sequence) -> tuple[Fraction, ...]:
        return tuple(sum((Fraction(c) * v for c, v in zip(row, y)), Fraction(0)) for row in self.D)

    def reconstruct(self, b: Sequence[int]) -> tuple[Fraction, ...]:
        """P(b) rebuilt from (R(b), D(R(b))) in the original row order."""
        y = self.R_apply(b)
        z = self.D_apply(y)
        out = [None] * self.P.ell
        for i, v in zip(self.selection, y):
            out[i] = Fraction(v)
        for i, v in zip(self.dependent, z):
            out[i] = v
        return tuple(out)


def decompose(P: PolynomialFamily) -> LiftDecomposition:
    rows = [list(r) for r in P.coeffs]
    if not any(any(r) for r in rows):
        raise ValueError("rank-0 family: every polynomial is zero")
    sel: list[int] = []
    for i, row in enumerate(rows):
        if sympy.Matrix([rows[j] for j in sel] + [row]).rank() > len(sel):
            sel.append(i)
    R = sympy.Matrix([rows[j] for j in sel])
    dep = [i for i in range(len(rows)) if i not in sel]
    D = []
    for i in dep:
        sol, params = R.T.gauss_jordan_solve(sympy.Matrix(rows[i]))
        if params.shape[0]:
            sol = sol.subs({p: 0 for p in params})
        D.append(tuple(_frac(x) for x in sol))
    return LiftDecomposition(P, len(sel), tuple(sel), tuple(dep), tuple(D))


def lattice_index(decomp: LiftDecomposition) -> int:
    """[Z^r : R(Z^k)], the gcd of the r x r minors of R."""
    R = sympy.Matrix(decomp.R.tolist())
    g = 0
    for cols in itertools.combinations(range(R.shape[1]), decomp.r):
        g = math.gcd(g, int(R.extract(list(range(decomp.r)), list(cols)).det()))
    return g


def _box_points(Np: int, k: int) -> np.ndarray:
    ax = np.arange(-Np, Np + 1, dtype=np.int64)
    grids = np.meshgrid(*([ax] * k), indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=1)


def _membership(values: np.ndarray, A: Sequence[int], N: int) -> np.ndarray:
    """Row-wise: every coordinate of ``values`` lies in A."""
    lookup = np.zeros(N + 1, dtype=bool)
    lookup[list(A)] = True
    inside = (values >= 1) & (values <= N)
    ok = np.zeros(values.shape, dtype=bool)
    ok[inside] = lookup[values[inside]]
    return ok.all(axis=1)


def shift_search(A: Iterable[int], decomp: LiftDecomposition, N_prime: int, side: int | None = None,
                 N: int | None = None, return_counts: bool = False):
    """Shift s in [1, side]^r maximizing #{b in [-N', N']^k : R(b) + s in A^r}.

    The default side is the lattice index of R(Z^k), which makes [1, side]^r a
    complete residue system for R(Z^k) in Z^r.  Ties go to the least s.
    """
    A = sorted(set(int(a) for a in A))
    if not A:
        raise ValueError("A is empty")
    N = max(A) if N is None else N
    side = lattice_index(decomp) if side is None else side
    k = decomp.P.k
    pts = _box_points(N_prime, k)
    Y = pts @ decomp.R.T
    counts = {}
    for s in itertools.product(range(1, side + 1), repeat=decomp.r):
        counts[s] = int(_membership(Y + np.array(s), A, N).sum())
    best = max(counts, key=lambda s: (counts[s], tuple(-x for x in s)))
    if counts[best] == 0:
        raise EmptyFiberError(f"no shift in [1, {side}]^{decomp.r} reaches A^r from the box")
    if return_counts:
        return best, counts[best], counts
    return best, counts[best]


@dataclass(frozen=True)
class LiftResult:
    B: PointSet
    m: tuple[int, ...]
    N_prime: int
    s: tuple[int, ...]
    t: tuple[int, ...]
    count_s: int
    count_t: int
    decomp: LiftDecomposition
    certificate: bool


def _gamma(N: int, decomp: LiftDecomposition, side: int) -> int:
    # image rows have l1-norm rho; cover targets up to N + side plus a full monomial step
    rho = max(sum(abs(c) for c in row) for row in decomp.R.tolist())
    dk = max(admissible_d_max(decomp.P, N), 1) ** decomp.P.k
    need = rho * (N + side) + dk
    return max(1, -(-need // N))


def build_lifted_set(A: Iterable[int], P: PolynomialFamily, N: int | None = None,
                     side: int | None = None, N_prime: int | None = None) -> LiftResult:
    """B = {b in [-N', N']^k : P(b) + m in A^l}, with m = (s, t) from two pigeonhole steps."""
    A = sorted(set(int(a) for a in A))
    if not A:
        raise ValueError("A is empty")
    N = max(A) if N is None else N
    decomp = decompose(P)
    side = lattice_index(decomp) if side is None else side
    if N_prime is None:
        N_prime = _gamma(N, decomp, side) * N
    s, count_s = shift_search(A, decomp, N_prime, side, N)
    k = P.k
    pts = _box_points(N_prime, k)
    C = np.array(P.coeffs, dtype=np.int64)
    img = pts @ C.T
    sel, dep = list(decomp.selection), list(decomp.dependent)
    on_R = _membership(img[:, sel] + np.array(s), A, N)
    # t-step: over b with R(b) + s in A^r, pick t maximizing hits of the dependent rows
    t: tuple[int, ...] = ()
    count_t = int(on_R.sum())
    if dep:
        V = img[on_R][:, dep]
        tally: dict[tuple[int, ...], int] = {}
        for v in map(tuple, V):
            for a in itertools.product(A, repeat=len(dep)):
                key = tuple(int(x - y) for x, y in zip(a, v))
                tally[key] = tally.get(key, 0) + 1
        t = max(tally, key=lambda u: (tally[u], tuple(-x for x in u)))
        count_t = tally[t]
    m = [0] * P.ell
    for i, v in zip(sel, s):
        m[i] = v
    for i, v in zip(dep, t):
        m[i] = v
    m = tuple(m)
    keep = _membership(img + np.array(m), A, N)
    if not keep.any():
        raise ReductionDegenerateError("lifted set is empty")
    B = PointSet(k=k, M=N_prime, points=pts[keep], mode="signed")
    cert = bool(_membership(B.points @ C.T + np.array(m), A, N).all())
    return LiftResult(B, m, N_prime, tuple(s), tuple(t), count_s, count_t, decomp, cert)


def lifted_monomial_difference(B: PointSet, d_max: int) -> int | None:
    """Least |d| in [1, d_max] (positive first) with (d, ..., d^k) in B - B."""
    pts = {tuple(int(x) for x in p) for p in B.points}
    for d in range(1, d_max + 1):
        for s in (d, -d):
            v = monomial_point(s, B.k)
            if any(tuple(x + y for x, y in zip(p, v)) in pts for p in pts):
                return s
    return None


def translate_to_positive(B: PointSet) -> PointSet:
    """Shift a signed-mode set by N' + 1 into the box Q_{2N'+1} (differences are unchanged)."""
    if B.mode != "signed":
        raise ValueError("expected a signed-mode set")
    M = 2 * B.M + 1
    return PointSet(k=B.k, M=M, points=B.points + B.M + 1, mode="box")


@dataclass(frozen=True)
class SumsetResult:
    m: int
    D: tuple[int, ...]
    total: int
    bound: Fraction
    containment: bool


def sumset_reduce(A: Iterable[int], Bset: Iterable[int], N: int | None = None) -> SumsetResult:
    """The m in [2, 2N] maximizing |Bset cap (m - A)|, with D = Bset cap (m - A).

    Since the counts sum to |A||Bset| over 2N - 1 values of m, |D| is at least
    their average; D - D lies in A + Bset - m, which is checked exhaustively.
    """
    A = sorted(set(int(a) for a in A))
    Bs = sorted(set(int(b) for b in Bset))
    if not A or not Bs:
        raise ValueError("both sets must be nonempty")
    N = max(A[-1], Bs[-1]) if N is None else N
    if A[0] < 1 or Bs[0] < 1 or max(A[-1], Bs[-1]) > N:
        raise ValueError("sets must lie in [1, N]")
    ia = np.zeros(N + 1, dtype=np.int64)
    ib = np.zeros(N + 1, dtype=np.int64)
    ia[A] = 1
    ib[Bs] = 1
    conv = np.convolve(ia, ib)  # conv[m] = #{(a, b) : a + b = m}
    ms = np.arange(2, 2 * N + 1)
    m = int(ms[np.argmax(conv[2 : 2 * N + 1])])
    Aset = set(A)
    D = tuple(b for b in Bs if m - b in Aset)
    sums = {a + b - m for a in A for b in Bs}
    contained = all(x - y in sums for x in D for y in D)
    return SumsetResult(m, D, int(conv[2 : 2 * N + 1].sum()), Fraction(len(A) * len(Bs), 2 * N - 1), contained)
