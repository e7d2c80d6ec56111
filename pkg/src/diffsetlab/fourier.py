"""Discrete Fourier analysis of lattice functions supported in an anisotropic box.

A function with finite support on Z^k is embedded in a finite group
Z_{T_1} x ... x Z_{T_k} large enough that nothing wraps around; the
transform there is the continuous transform sampled at alpha = xi / T.
Sign convention: f^(alpha) = sum_m f(m) e^{-2 pi i m . alpha}.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import reduce
from pathlib import Path
from typing import Sequence

import numpy as np

from .core import AnisoBox, PointSet, as_fraction, monomial_point, shifted_overlap

__all__ = [
    "WraparoundError",
    "EmptyWindowError",
    "EmbeddingGroup",
    "Spectrum",
    "BalanceFunction",
    "balance_function",
    "dft",
    "direct_transform",
    "autocorrelation",
    "exponential_sum",
    "weyl_sum",
    "weyl_sums_lattice",
    "weighted_count_identity",
    "spectral_count",
    "abs_spectral_integral",
    "save_spectrum",
    "load_spectrum",
]


class WraparoundError(ValueError):
    """The embedding group is too small for the requested support."""


class EmptyWindowError(ValueError):
    pass


def _pow2_at_least(n: int) -> int:
    return 1 << max(0, (int(n) - 1).bit_length())


@dataclass(frozen=True)
class EmbeddingGroup:
    """Z_{T_1} x ... x Z_{T_k}; frequency xi stands for alpha = (xi_1/T_1, ..., xi_k/T_k)."""

    T: tuple[int, ...]

    @property
    def k(self) -> int:
        return len(self.T)

    @property
    def order(self) -> int:
        return math.prod(self.T)

    @classmethod
    def for_box(cls, M: int, k: int, eta=None) -> "EmbeddingGroup":
        """Power-of-two cycle lengths with T_j >= 2 M^j + 1.

        With ``eta`` given, also T_j >= 9/2 eta^k M^j, i.e. lattice spacing at most
        a quarter of the major-box half-width 1/(eta^k M^j).
        """
        T = []
        for j in range(1, k + 1):
            need = 2 * M**j + 1
            if eta is not None:
                need = max(need, math.ceil(Fraction(9, 2) * as_fraction(eta) ** k * M**j))
            T.append(_pow2_at_least(need))
        return cls(tuple(T))

    def check_box(self, M: int, k: int, convolution: bool = True):
        for j, t in enumerate(self.T, start=1):
            need = 2 * M**j + 1 if convolution else M**j + 1
            if t < need:
                raise WraparoundError(f"T_{j}={t} < {need}: supports in Q_M would wrap around")

    def frequencies(self, axis: int) -> np.ndarray:
        return np.arange(self.T[axis], dtype=np.int64)


@dataclass(frozen=True, eq=False)
class Spectrum:
    group: EmbeddingGroup
    values: np.ndarray

    def inverse(self) -> np.ndarray:
        """Back to the group: entry at index m mod T is f(m)."""
        return np.fft.ifftn(self.values)

    def plancherel_sum(self) -> float:
        """(1 / prod T) sum_xi |f^(xi)|^2."""
        return float(np.sum(np.abs(self.values) ** 2) / self.group.order)

    def at(self, xi: Sequence[int]) -> complex:
        return complex(self.values[tuple(int(x) % t for x, t in zip(xi, self.group.T))])


@dataclass(frozen=True, eq=False)
class BalanceFunction:
    """f_B = 1_B - delta 1_{Q_M}, held exactly as numerators over |Q_M|.

    ``numerators`` is |Q_M| 1_B - |B| 1_{Q_M} on the box (integers).
    """

    box: AnisoBox
    mask: np.ndarray
    cardinality: int

    @property
    def delta(self) -> Fraction:
        return Fraction(self.cardinality, self.box.volume)

    @property
    def scale(self) -> int:
        return self.box.volume

    @property
    def numerators(self) -> np.ndarray:
        dt = np.int64 if self.scale < 2**62 else object
        return self.mask.astype(dt) * self.scale - self.cardinality

    def values(self) -> np.ndarray:
        return self.mask.astype(float) - float(self.delta)

    def value(self, p: Sequence[int]) -> Fraction:
        if not self.box.contains(p):
            return Fraction(0)
        inside = bool(self.mask[tuple(x - 1 for x in p)])
        return (1 if inside else 0) - self.delta

    def exact_sum(self) -> Fraction:
        n = self.cardinality
        return n * (1 - self.delta) - (self.box.volume - n) * self.delta

    def exact_square_sum(self) -> Fraction:
        n = self.cardinality
        return n * (1 - self.delta) ** 2 + (self.box.volume - n) * self.delta**2


def balance_function(B: PointSet) -> BalanceFunction:
    return BalanceFunction(B.box, np.asarray(B.mask), B.cardinality)


def _embed(values: np.ndarray, group: EmbeddingGroup, origin: int = 1) -> np.ndarray:
    """Place box-indexed values (index = coordinate - origin) at coordinate mod T."""
    for n, t in zip(values.shape, group.T):
        if n > t:
            raise WraparoundError(f"support of extent {n} does not fit in a cycle of length {t}")
    out = np.zeros(group.T, dtype=complex if np.iscomplexobj(values) else float)
    out[tuple(slice(0, n) for n in values.shape)] = values
    return np.roll(out, shift=[origin] * values.ndim, axis=tuple(range(values.ndim)))


def dft(f, group: EmbeddingGroup) -> Spectrum:
    """Transform of a function on Q_M (array indexed by coordinate - 1, or a BalanceFunction)."""
    if isinstance(f, BalanceFunction):
        f = f.values()
    arr = _embed(np.asarray(f, dtype=float if not np.iscomplexobj(f) else complex), group)
    return Spectrum(group, np.fft.fftn(arr))


def direct_transform(points: np.ndarray, weights: np.ndarray, alphas: np.ndarray) -> np.ndarray:
    """sum_p w_p e^{-2 pi i p . alpha} by direct summation, for each row of ``alphas``."""
    points = np.asarray(points, dtype=float)
    alphas = np.atleast_2d(np.asarray(alphas, dtype=float))
    phase = alphas @ points.T
    phase -= np.floor(phase)
    return np.exp(-2j * np.pi * phase) @ np.asarray(weights, dtype=complex)


def autocorrelation(mask: np.ndarray) -> np.ndarray:
    """r(v) = sum_m 1(m) 1(m - v) on a group with no wraparound, indexed by v mod T."""
    T = tuple(_pow2_at_least(2 * n + 1) for n in mask.shape)
    axes = tuple(range(mask.ndim))
    F = np.fft.rfftn(mask.astype(float), s=T, axes=axes)
    return np.fft.irfftn(np.abs(F) ** 2, s=T, axes=axes)


# ---------------------------------------------------------------------------
# exponential sums


def _phases_exact(alpha: Sequence, D: int) -> np.ndarray:
    """Fractional parts of P(alpha, d) for d = 1..D, reduced exactly before rounding to float."""
    fr = [as_fraction(a) for a in alpha]
    den = reduce(math.lcm, (f.denominator for f in fr), 1)
    num = [f.numerator * (den // f.denominator) % den for f in fr]
    if den < 2**31:
        d = np.arange(1, D + 1, dtype=np.int64) % den
        p = np.ones(D, dtype=np.int64)
        acc = np.zeros(D, dtype=np.int64)
        for c in num:
            p = (p * d) % den
            acc = (acc + c * p) % den
        return acc / den
    out = np.empty(D)
    for d in range(1, D + 1):
        acc, p = 0, 1
        for c in num:
            p = p * d % den
            acc = (acc + c * p) % den
        out[d - 1] = float(Fraction(acc, den))
    return out


def exponential_sum(alpha: Sequence, D: int, sign: int = -1) -> complex:
    """sum_{d=1}^D e^{sign 2 pi i (alpha_1 d + ... + alpha_k d^k)}.

    Phases are reduced mod 1 in exact rational arithmetic (floats are taken at
    their exact binary value); the final sum is correctly rounded by fsum.
    """
    if D < 1:
        raise EmptyWindowError("empty summation window")
    ph = 2 * np.pi * _phases_exact(alpha, D)
    return complex(math.fsum(np.cos(ph)), sign * math.fsum(np.sin(ph)))


def weyl_sum(alpha: Sequence, M: int, eps, k: int) -> complex:
    """1_S^(alpha) for S = {(d, ..., d^k) : 1 <= d <= floor(eps M)}."""
    if len(alpha) != k:
        raise ValueError(f"alpha must have {k} coordinates")
    D = math.floor(as_fraction(eps) * M)
    if D < 1:
        raise EmptyWindowError(f"floor(eps*M) = {D}: window is empty")
    return exponential_sum(alpha, D, sign=-1)


def weyl_sums_lattice(xi: np.ndarray, T: Sequence[int], D: int, sign: int = -1) -> np.ndarray:
    """Exponential sums at lattice frequencies alpha_j = xi_j / T_j, vectorized over rows of xi.

    Every phase is reduced exactly in int64 (requires T_j < 2^31).
    """
    xi = np.atleast_2d(np.asarray(xi, dtype=np.int64))
    if max(T) >= 2**31:
        raise ValueError("cycle lengths must be below 2^31 for the int64 path")
    d = np.arange(1, D + 1, dtype=np.int64)
    phase = np.zeros((len(xi), D))
    for j, t in enumerate(T, start=1):
        dp = np.ones(D, dtype=np.int64)
        for _ in range(j):
            dp = dp * (d % t) % t
        r = (xi[:, j - 1 : j] % t) * dp[None, :] % t
        phase += r / t
    phase -= np.floor(phase)
    return np.sum(np.exp(sign * 2j * np.pi * phase), axis=1)


# ---------------------------------------------------------------------------
# counting identities


def _window_length(M: int, eps) -> int:
    D = min(math.floor(as_fraction(eps) * M), M)
    if D < 1:
        raise EmptyWindowError(f"floor(eps*M) = {D}: window is empty")
    return D


def weighted_count_identity(B: PointSet, eps) -> tuple[Fraction, dict[str, Fraction]]:
    """sum_{m,n} f_B(m) f_B(n) 1_S(m - n), directly and as four sums.

    The direct value is an exact rational computed from integer numerators;
    the expansion splits f_B = 1_B - delta 1_Q into the four bilinear pieces.
    """
    f = balance_function(B)
    D = _window_length(B.M, eps)
    num = f.numerators
    if f.scale**3 * D >= 2**62:
        num = num.astype(object)
    direct = sum(shifted_overlap(num, num, monomial_point(d, B.k)) for d in range(1, D + 1))
    lhs = Fraction(direct, f.scale**2)

    mask = B.mask
    full = np.ones_like(mask)
    delta = f.delta
    vs = [monomial_point(d, B.k) for d in range(1, D + 1)]
    terms = {
        "B,B": Fraction(sum(shifted_overlap(mask, mask, v) for v in vs)),
        "B,Q": -delta * sum(shifted_overlap(mask, full, v) for v in vs),
        "Q,B": -delta * sum(shifted_overlap(full, mask, v) for v in vs),
        "Q,Q": delta**2 * sum(math.prod(s - x for s, x in zip(B.box.sides, v)) for v in vs),
    }
    return lhs, terms


def _window_spectrum(group: EmbeddingGroup, M: int, k: int, D: int) -> np.ndarray:
    arr = np.zeros(group.T)
    d = np.arange(1, D + 1)
    arr[tuple((d**j) % group.T[j - 1] for j in range(1, k + 1))] = 1.0
    return np.fft.fftn(arr)


def spectral_count(B: PointSet, eps, group: EmbeddingGroup | None = None) -> float:
    """(1/prod T) sum_xi |f_B^(xi)|^2 1_S^(xi) -- equals the direct weighted count."""
    group = group or EmbeddingGroup.for_box(B.M, B.k)
    group.check_box(B.M, B.k)
    D = _window_length(B.M, eps)
    F = dft(balance_function(B), group).values
    S = _window_spectrum(group, B.M, B.k, D)
    return float(np.real(np.sum(np.abs(F) ** 2 * S)) / group.order)


def abs_spectral_integral(B: PointSet, eps, group: EmbeddingGroup | None = None) -> float:
    """Lattice version of the integral of |f_B^|^2 |1_S^| over the torus."""
    group = group or EmbeddingGroup.for_box(B.M, B.k)
    group.check_box(B.M, B.k)
    D = _window_length(B.M, eps)
    F = dft(balance_function(B), group).values
    S = _window_spectrum(group, B.M, B.k, D)
    return float(np.sum(np.abs(F) ** 2 * np.abs(S)) / group.order)


# ---------------------------------------------------------------------------
# spectrum export


def save_spectrum(spec: Spectrum, path, M: int, eta=None) -> None:
    """Little-endian complex128 array at ``path`` plus a JSON sidecar ``path.json``."""
    path = Path(path)
    np.ascontiguousarray(spec.values, dtype="<c16").tofile(path)
    meta = {"T": list(spec.group.T), "k": spec.group.k, "M": M, "eta": None if eta is None else str(as_fraction(eta))}
    path.with_name(path.name + ".json").write_text(json.dumps(meta))


def load_spectrum(path) -> tuple[Spectrum, dict]:
    path = Path(path)
    meta = json.loads(path.with_name(path.name + ".json").read_text())
    group = EmbeddingGroup(tuple(meta["T"]))
    vals = np.fromfile(path, dtype="<c16").reshape(group.T)
    return Spectrum(group, vals), meta
