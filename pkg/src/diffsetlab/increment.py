"""Randomness/structure dichotomy, L^2 increment bookkeeping, and the iteration driver.

Densities and grid counts are exact.  Spectral masses are floating point and
come with a discretization estimate: the integral over a major box is replaced
by a lattice sum, and the mass in a one-step shell around the box boundary is
reported as the error of that replacement.
"""
from __future__ import annotations

import itertools
import json
import math
import time
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .arcs import major_axis_masks
from .core import (
    AnisoBox,
    GridSpec,
    LabConstants,
    PointSet,
    as_fraction,
)
from .diffset import find_monomial_witness, randomness_defect
from .fourier import EmbeddingGroup, balance_function, dft

__all__ = [
    "DegeneratePartitionError",
    "ResolutionError",
    "GeometryError",
    "EmptySubproblemError",
    "Random",
    "Structured",
    "Undecided",
    "PartitionResult",
    "partition_reduce",
    "find_increment_grid",
    "margin_fraction",
    "dichotomy",
    "l2_mass_on_major_boxes",
    "l2_mass_table",
    "sigma_at_precondition",
    "certify_regular",
    "spectral_mass_check",
    "grid_convolution_bound",
    "claim_c1_check",
    "rescale_to_subproblem",
    "IterationTrace",
    "iterate",
    "bound_calculator",
]

# a float just above pi, so 8 sigma PI_HI <= eta^(k-2) implies the real condition
PI_HI = Fraction(math.nextafter(math.pi, 4.0))


class DegeneratePartitionError(ValueError):
    pass


class ResolutionError(ValueError):
    pass


class GeometryError(ValueError):
    pass


class EmptySubproblemError(ValueError):
    pass


# ---------------------------------------------------------------------------
# comb sums along one axis (exact integer arithmetic)


def _strided_cumsum(a: np.ndarray, s: int) -> np.ndarray:
    """C[y] = sum of a[i] over i <= y, i = y (mod s), along axis 0."""
    n = a.shape[0]
    pad = (-n) % s
    if pad:
        a = np.concatenate([a, np.zeros((pad,) + a.shape[1:], dtype=a.dtype)])
    c = a.reshape((-1, s) + a.shape[1:]).cumsum(axis=0)
    return c.reshape((-1,) + a.shape[1:])[:n]


def _comb_window(arr: np.ndarray, axis: int, s: int, count: int) -> np.ndarray:
    """out[y] = sum_{t<count} arr[y + t s], for every y keeping the comb inside the array."""
    a = np.moveaxis(arr, axis, 0)
    n = a.shape[0]
    ny = n - (count - 1) * s
    if ny <= 0:
        return np.moveaxis(np.zeros((0,) + a.shape[1:], dtype=a.dtype), 0, axis)
    C = _strided_cumsum(a, s)
    hi = C[(count - 1) * s : n]
    lo = np.zeros_like(hi)
    if ny > s:
        lo[s:] = C[: ny - s]
    return np.moveaxis(hi - lo, 0, axis)


def _comb_conv(arr: np.ndarray, axis: int, s: int, count: int) -> np.ndarray:
    """Full linear convolution with the comb {0, s, ..., (count-1) s}."""
    a = np.moveaxis(arr, axis, 0)
    n = a.shape[0]
    out_n = n + (count - 1) * s
    P = np.zeros((out_n,) + a.shape[1:], dtype=a.dtype)
    P[:n] = a
    C = _strided_cumsum(P, s)
    out = C.copy()
    if out_n > count * s:
        out[count * s :] -= C[: out_n - count * s]
    return np.moveaxis(out, 0, axis)


def _grid_counts(mask: np.ndarray, q: int, L: int) -> np.ndarray | None:
    """|B cap (m + (l_1 q, ..., l_k q^k))| for every base m keeping the grid in Q_M.

    Entry y corresponds to m_j = y_j + 1 - q^j.
    """
    out = mask.astype(np.int64)
    for j in range(mask.ndim):
        s, n = q ** (j + 1), L ** (j + 1)
        if (n - 1) * s >= mask.shape[j]:
            return None
        out = _comb_window(out, j, s, n)
    return out


# ---------------------------------------------------------------------------
# partition into boxes


@dataclass(frozen=True)
class PartitionResult:
    B0: PointSet
    M: int
    offset: tuple[int, ...]
    density: Fraction
    guaranteed: Fraction
    meets_average: bool


def _window_sums(mask: np.ndarray, sides: Sequence[int]) -> np.ndarray:
    """Count in every placement of a box with the given sides (summed-area table)."""
    S = np.pad(mask.astype(np.int64), [(1, 0)] * mask.ndim)
    for ax in range(mask.ndim):
        S = S.cumsum(axis=ax)
    out = 0
    for corner in itertools.product((0, 1), repeat=mask.ndim):
        sl = tuple(slice(side, None) if c else slice(0, S.shape[j] - side)
                   for j, (c, side) in enumerate(zip(corner, sides)))
        out = out + (-1) ** (mask.ndim - sum(corner)) * S[sl]
    return out


def partition_reduce(B, N: int, k: int) -> PartitionResult:
    """Densest placement of a Q_M-shaped cell inside [1, N]^k, M = floor(N^(1/k)).

    ``B`` is an array of points in [1, N]^k (or a signed/box PointSet).  Every
    placement of the cell is tried and the lexicographically least densest one
    is returned, recentred into Q_M.  A tiling by prod_j ceil(N / M^j) cells
    covers [1, N]^k, so the returned density is at least |B| over that many
    cell volumes; when every M^j divides N this is the plain average |B|/N^k.
    """
    if N < 2**k:
        raise DegeneratePartitionError(f"N={N} < 2^k: cells would be single points")
    pts = B.points if isinstance(B, PointSet) else np.asarray(B, dtype=np.int64).reshape(-1, k)
    if len(pts) and ((pts < 1) | (pts > N)).any():
        raise ValueError("points must lie in [1, N]^k")
    M = _iroot(N, k)
    box = AnisoBox(M, k)
    if any(s > N for s in box.sides):
        raise DegeneratePartitionError(f"cell side M^k={M**k} exceeds N={N}")
    mask = np.zeros((N,) * k, dtype=bool)
    mask[tuple((pts - 1).T)] = True
    sums = _window_sums(mask, box.sides)
    idx = np.unravel_index(int(np.argmax(sums)), sums.shape)
    offset = tuple(int(i) for i in idx)
    cell = mask[tuple(slice(o, o + s) for o, s in zip(offset, box.sides))]
    B0 = PointSet.from_mask(cell, M)
    cells = math.prod(-(-N // s) for s in box.sides)
    guaranteed = Fraction(len(pts), cells * box.volume)
    return PartitionResult(B0, M, offset, B0.density, guaranteed, B0.density >= Fraction(len(pts), N**k))


def _iroot(N: int, k: int) -> int:
    r = int(round(N ** (1.0 / k)))
    while r**k > N:
        r -= 1
    while (r + 1) ** k <= N:
        r += 1
    return r


# ---------------------------------------------------------------------------
# the dichotomy


@dataclass(frozen=True)
class Random:
    count: int
    threshold: Fraction
    kind: str = "random"


@dataclass(frozen=True)
class Structured:
    grid: GridSpec
    density_on_grid: Fraction
    required: Fraction
    L_condition: bool
    via_margin: bool = False
    kind: str = "structured"


@dataclass(frozen=True)
class Undecided:
    diagnostics: dict
    kind: str = "undecided"


def _increment_scan(B: PointSet, q: int, L: int, required: Fraction):
    counts = _grid_counts(B.mask, q, L)
    if counts is None or counts.size == 0:
        return None
    size = L ** (B.k * (B.k + 1) // 2)
    cut = math.floor(required * size)
    hit = np.argwhere(counts > cut)
    if len(hit) == 0:
        return None
    y = hit[0]
    base = tuple(int(y[j]) + 1 - q ** (j + 1) for j in range(B.k))
    return GridSpec(base, q, L, 1), Fraction(int(counts[tuple(y)]), size)


def _side_for(q: int, eta: Fraction, sigma: Fraction, M: int) -> int:
    # smallest L with q L >= eta^2 sigma M
    return max(1, math.ceil(eta**2 * sigma * M / q))


def find_increment_grid(B: PointSet, sigma, consts: LabConstants) -> Structured | None:
    """First grid, scanning q = 1..floor(eta^-k) then base m lexicographically,
    with |B cap grid| > delta (1 + sigma) |grid|.

    The side is the least L with q L >= eta^2 sigma M; grids must lie in Q_M.
    """
    if B.cardinality == 0:
        raise ValueError("empty set")
    sigma = as_fraction(sigma)
    delta, eta, k, M = B.density, consts.eta, B.k, B.M
    required = delta * (1 + sigma)
    Q = math.floor(eta ** (-k))
    fitted = False
    for q in range(1, Q + 1):
        L = _side_for(q, eta, sigma, M)
        if any((L ** (j + 1) - 1) * q ** (j + 1) >= M ** (j + 1) for j in range(k)):
            continue
        fitted = True
        hit = _increment_scan(B, q, L, required)
        if hit is not None:
            grid, dens = hit
            return Structured(grid, dens, required, L >= delta ** (k + 2) * sigma * M)
    if not fitted:
        raise ResolutionError("no grid with q <= eta^-k and q L >= eta^2 sigma M fits inside Q_M")
    return None


def margin_fraction(B: PointSet, eps) -> Fraction:
    """|B'| / |B| where B' drops the eps-margin (eps M^j, (1 - eps) M^j] on every axis."""
    eps = as_fraction(eps)
    keep = np.ones(len(B.points), dtype=bool)
    for j, s in enumerate(B.box.sides):
        x = B.points[:, j]
        lo, hi = eps * s, (1 - eps) * s
        keep &= (x * lo.denominator > lo.numerator) & (x * hi.denominator <= hi.numerator)
    return Fraction(int(keep.sum()), B.cardinality)


def dichotomy(B: PointSet, consts: LabConstants, with_l2: bool = True) -> Random | Structured | Undecided:
    """Random if the monomial count clears its threshold, else Structured if a
    dense grid turns up, else Undecided with the spectral diagnostics."""
    if B.cardinality and _below_floor(B.M, B.density, consts.C_lab):
        warnings.warn("M below delta^-C_lab; the dichotomy need not bind here", stacklevel=2)
    rep = randomness_defect(B, consts)
    if rep.is_random:
        return Random(rep.count, rep.threshold)
    sigma = consts.sigma
    hit = find_increment_grid(B, sigma, consts)
    if hit is not None:
        return hit
    frac = margin_fraction(B, consts.eps)
    if frac < Fraction(3, 4):
        L = max(1, math.ceil(consts.eps * B.M))
        req = B.density * (1 + sigma)
        m = _increment_scan(B, 1, L, req)
        if m is not None:
            grid, dens = m
            return Structured(grid, dens, req, L >= B.density ** (B.k + 2) * sigma * B.M, via_margin=True)
    diag = {"count": rep.count, "threshold": str(rep.threshold), "margin_fraction": str(frac)}
    if with_l2:
        table = l2_mass_table(B, consts)
        c = consts.c_lab * B.density ** (B.k - 1)
        floor_ok = table["max"] >= c
        ceiling_ok = all(v <= 12 * float(sigma) + e for v, e in zip(table["mass"].values(), table["error"].values()))
        diag.update({
            "l2_max": table["max"],
            "l2_argmax": table["argmax"],
            "mass_floor": float(c),
            "mass_floor_holds": bool(floor_ok),
            "mass_ceiling": 12 * float(sigma),
            "mass_ceiling_holds": bool(ceiling_ok),
            "contradiction": bool(floor_ok and ceiling_ok and sigma <= c / 13),
        })
    return Undecided(diag)


# ---------------------------------------------------------------------------
# spectral mass on major boxes


def _check_group(group: EmbeddingGroup, M: int, k: int, eta: Fraction):
    for j, t in enumerate(group.T, start=1):
        need = max(2 * M**j + 1, math.ceil(Fraction(9, 2) * eta**k * M**j))
        if t < need:
            raise ResolutionError(f"T_{j}={t} too coarse; refine to at least {need}")


def _batched_mass(power: np.ndarray, qs, eta, M: int, k: int, T, widen: int = 0) -> np.ndarray:
    """sum over M_q of power, for every q in qs at once (product masks, contracted axis by axis)."""
    masks = [major_axis_masks(q, eta, M, k, T, widen) for q in qs]
    # contract the last axis with all q at once, then the rest per q
    last = np.stack([m[-1] for m in masks], axis=1).astype(float)  # (T_k, nq)
    x = power.reshape(-1, power.shape[-1]) @ last                     # (prod T_<k, nq)
    x = x.reshape(power.shape[:-1] + (len(qs),))
    out = np.empty(len(qs))
    for i, m in enumerate(masks):
        y = x[..., i]
        for ax_mask in reversed(m[:-1]):
            y = y @ ax_mask.astype(float)
        out[i] = float(y)
    return out


def l2_mass_table(B: PointSet, consts: LabConstants, group: EmbeddingGroup | None = None,
                  qs: Sequence[int] | None = None) -> dict:
    """(1/(delta|B|)) (1/prod T) sum_{xi in M_q} |f_B^(xi)|^2 for each q <= eta^-k.

    ``error`` is the larger of the masses gained or lost by moving the box
    boundary one lattice step out or in.
    """
    k, M, eta = B.k, B.M, consts.eta
    group = group or EmbeddingGroup.for_box(M, k, eta)
    _check_group(group, M, k, eta)
    Q = math.floor(eta ** (-k))
    qs = list(range(1, Q + 1)) if qs is None else list(qs)
    if any(not 1 <= q <= Q for q in qs):
        raise ValueError(f"q must lie in [1, {Q}]")
    power = np.abs(dft(balance_function(B), group).values) ** 2
    norm = float(B.density) * B.cardinality * group.order if B.cardinality else 1.0
    mid = _batched_mass(power, qs, eta, M, k, group.T) / norm
    hi = _batched_mass(power, qs, eta, M, k, group.T, 1) / norm
    lo = _batched_mass(power, qs, eta, M, k, group.T, -1) / norm
    mass = {q: float(v) for q, v in zip(qs, mid)}
    err = {q: float(max(h - v, v - l)) for q, v, h, l in zip(qs, mid, hi, lo)}
    best = max(mass, key=lambda q: (mass[q], -q)) if mass else None
    return {"mass": mass, "error": err, "max": mass[best] if mass else 0.0, "argmax": best,
            "total": float(np.sum(power)) / norm, "T": list(group.T)}


def l2_mass_on_major_boxes(B: PointSet, q: int, consts: LabConstants, group: EmbeddingGroup | None = None) -> float:
    return l2_mass_table(B, consts, group, qs=[q])["mass"][q]


def sigma_at_precondition(eta, k: int) -> Fraction:
    """Largest rational we can certify below eta^(k-2) / (8 pi)."""
    return as_fraction(eta) ** (k - 2) / (8 * PI_HI)


def _sigma_ok(sigma: Fraction, eta: Fraction, k: int) -> bool:
    return 8 * sigma * PI_HI <= eta ** (k - 2)


def certify_regular(B: PointSet, consts: LabConstants) -> bool:
    """Exhaustive grid scan at q L = ceil(eta^2 sigma M): True when no grid beats delta (1 + sigma)."""
    return find_increment_grid(B, consts.sigma, consts) is None


def spectral_mass_check(B: PointSet, consts: LabConstants, group: EmbeddingGroup | None = None) -> dict:
    """For a regular B, compare every M_q mass with 12 sigma (+ discretization error)."""
    sigma, eta = consts.sigma, consts.eta
    pre = _sigma_ok(sigma, eta, B.k)
    regular = certify_regular(B, consts)
    table = l2_mass_table(B, consts, group)
    bound = 12 * float(sigma)
    worst = max((v - e for v, e in zip(table["mass"].values(), table["error"].values())), default=0.0)
    return {"precondition": pre, "regular": regular, "bound": bound, "table": table,
            "holds": worst <= bound, "slack": bound - worst}


# ---------------------------------------------------------------------------
# the grid convolution f_B * 1_Lambda


def grid_convolution_bound(B: PointSet, grid: GridSpec, sigma) -> dict:
    """Exact f_B * 1_Lambda with its split into interior and boundary parts.

    Values are kept as integers over the common denominator |Q_M|.
    """
    sigma = as_fraction(sigma)
    k, box = B.k, B.box
    if grid.k != k:
        raise ValueError("grid and set dimensions differ")
    for j, side in enumerate(box.sides):
        if (grid.L ** (j + 1) - 1) * grid.q ** (j + 1) >= side:
            raise GeometryError(f"grid spans more than Q_M along axis {j + 1}")
    f = balance_function(B)
    conv = f.numerators.astype(np.int64)
    starts = []
    for j in range(k):
        s, n = grid.q ** (j + 1), grid.L ** (j + 1)
        start = grid.base[j] + (s if grid.sign > 0 else -n * s)
        starts.append(start)
        conv = _comb_conv(conv, j, s, n)
    # conv index y <-> coordinate y + 1 + start_j
    scale = f.scale
    size = grid.size
    interior = []
    for j, side in enumerate(box.sides):
        s, n = grid.q ** (j + 1), grid.L ** (j + 1)
        lo = (n - 1) * s  # first index with m - Lambda inside Q_M
        hi = side - 1     # last such index
        interior.append(slice(lo, hi + 1))
    inner = np.zeros(conv.shape, dtype=bool)
    inner[tuple(interior)] = True
    # Q_M + Lambda as a product of per-axis sumsets
    support_axes = []
    for j, side in enumerate(box.sides):
        s, n = grid.q ** (j + 1), grid.L ** (j + 1)
        cov = _comb_conv(np.ones(side, dtype=np.int64), 0, s, n) > 0
        support_axes.append(cov)
    support = np.ones(conv.shape, dtype=bool)
    for j, cov in enumerate(support_axes):
        shape = [1] * k
        shape[j] = -1
        support = support & cov.reshape(shape)
    boundary = support & ~inner
    vals = conv.astype(object)
    sum_M = Fraction(int((vals[inner] ** 2).sum()), scale**2) if inner.any() else Fraction(0)
    sum_E = Fraction(int((vals[boundary] ** 2).sum()), scale**2) if boundary.any() else Fraction(0)
    delta = f.delta
    inner_vals = conv[inner]
    mn = Fraction(int(inner_vals.min()), scale) if inner.any() else Fraction(0)
    mx = Fraction(int(inner_vals.max()), scale) if inner.any() else Fraction(0)
    size_E = int(boundary.sum())
    size_M = int(inner.sum())
    r = Fraction(grid.q * grid.L, box.M)
    return {
        "sum_interior": sum_M,
        "sum_boundary": sum_E,
        "total": sum_M + sum_E,
        "mean_zero": int(conv.astype(object).sum()) == 0,
        "bound_3sigma": 3 * sigma * delta * B.cardinality * size**2,
        "interior_min": mn,
        "interior_max": mx,
        "chain_lower": mn >= -delta * size,
        "chain_upper": mx <= delta * sigma * size,
        "size_interior": size_M,
        "size_boundary": size_E,
        "boundary_formula": ((1 + 2 * r) ** k - (1 - 2 * r) ** k) * box.volume,
        "boundary_linear": 8 * k * r * box.volume,
        "qL_over_M": r,
    }


# ---------------------------------------------------------------------------
# the grid transform is large on M_q


def claim_c1_check(grid: GridSpec, q: int, eta, sigma, M: int, samples: int = 500, seed: int = 0,
                   force: bool = False) -> dict:
    """min over sampled alpha in M_q of |1_Lambda^(alpha)| / |Lambda|.

    Samples alpha = a/q + beta with a uniform in [1, q]^k and beta uniform in
    the box, plus the centre and all 2^k corners.  Since the grid steps are
    q^j, the phase l_j q^j alpha_j reduces exactly to l_j q^j beta_j mod 1.
    """
    eta, sigma = as_fraction(eta), as_fraction(sigma)
    k = grid.k
    if grid.q != q:
        raise ValueError("grid modulus differs from q")
    pre = _sigma_ok(sigma, eta, k)
    target = math.ceil(eta**2 * sigma * M)
    report = {"precondition": pre, "qL": q * grid.L, "qL_target": target, "samples": 0,
              "violations": 0, "min_ratio": None, "skipped": False}
    if not pre and not force:
        report["skipped"] = True
        return report
    rng = np.random.default_rng([seed, q, grid.L, M])
    widths = [1 / (eta**k * Fraction(M) ** j) for j in range(1, k + 1)]
    betas = [[Fraction(0)] * k]
    betas += [[s * w for s, w in zip(signs, widths)] for signs in itertools.product((-1, 1), repeat=k)]
    while len(betas) < samples:
        u = rng.integers(-(2**30), 2**30 + 1, size=k)
        betas.append([Fraction(int(x), 2**30) * w for x, w in zip(u, widths)])
    size = grid.size
    ratios = []
    for beta in betas:
        val = 1.0
        for j in range(k):
            s = q ** (j + 1)
            ell = np.arange(1, grid.L ** (j + 1) + 1)
            step = (grid.sign * s * beta[j]) % 1
            ph = (ell * step.numerator % step.denominator) / step.denominator if step.denominator < 2**62 // max(1, len(ell)) else \
                np.array([float((l * step) % 1) for l in ell])
            val *= abs(np.exp(-2j * np.pi * ph).sum())
        ratios.append(val / size)
    report["samples"] = len(ratios)
    report["min_ratio"] = float(min(ratios))
    report["violations"] = int(sum(r < 0.5 for r in ratios))
    return report


# ---------------------------------------------------------------------------
# rescaling and iteration


def rescale_to_subproblem(B: PointSet, grid: GridSpec) -> tuple[PointSet, int]:
    """Pull B back along l -> m + sign (l_1 q, ..., l_k q^k), l in Q_L."""
    if grid.k != B.k:
        raise ValueError("dimension mismatch")
    L = grid.L
    sides = B.box.sides
    axes, valid = [], []
    for j, coords in enumerate(grid.coordinate_ranges()):
        ok = (coords >= 1) & (coords <= sides[j])
        axes.append(np.clip(coords - 1, 0, sides[j] - 1))
        valid.append(ok)
    sub = B.mask[np.ix_(*axes)].copy()
    for j, ok in enumerate(valid):
        shape = [1] * B.k
        shape[j] = -1
        sub &= ok.reshape(shape)
    if not sub.any():
        raise EmptySubproblemError("B does not meet the grid")
    return PointSet.from_mask(sub, L), L


@dataclass
class IterationTrace:
    steps: list = field(default_factory=list)
    stop_reason: str = ""
    witness: tuple | None = None

    def densities(self) -> list[Fraction]:
        return [s["delta"] for s in self.steps]

    def to_jsonl(self, runtimes: bool = False) -> str:
        lines = []
        for s in self.steps:
            rec = {
                "n": s["n"],
                "M_n": s["M"],
                "delta_n": str(s["delta"]),
                "outcome": s["outcome"],
                "grid": None if s["grid"] is None else {"base": list(s["grid"].base), "q": s["grid"].q,
                                                          "L": s["grid"].L, "sign": s["grid"].sign},
                "checks": s["checks"],
            }
            if runtimes:
                rec["runtime"] = s["runtime"]
            lines.append(json.dumps(rec, sort_keys=True))
        lines.append(json.dumps({"stop_reason": self.stop_reason,
                                 "witness": None if self.witness is None else [list(map(int, w)) if isinstance(w, tuple) else int(w) for w in self.witness]},
                                sort_keys=True))
        return "\n".join(lines) + "\n"


def _below_floor(M: int, delta: Fraction, C: Fraction) -> bool:
    # M <= delta^-C  <=>  M^den delta^num <= 1
    if delta == 0:
        return False
    return Fraction(M) ** C.denominator * delta**C.numerator <= 1


def iterate(B: PointSet, consts: LabConstants, max_steps: int = 32, with_l2: bool = False) -> IterationTrace:
    """Run the dichotomy repeatedly, descending into each structured grid.

    ``consts`` provides everything but the density, which is refreshed each step.
    """
    trace = IterationTrace()
    cur = B
    for n in range(max_steps + 1):
        delta = cur.density
        c = consts.with_delta(delta)
        step = {"n": n, "M": cur.M, "delta": delta, "outcome": None, "grid": None, "checks": {}, "runtime": 0.0}
        trace.steps.append(step)
        if cur.cardinality == 0 or _below_floor(cur.M, delta, consts.C_lab):
            trace.stop_reason = "size-floor"
            return trace
        if n == max_steps:
            trace.stop_reason = "step-limit"
            return trace
        t0 = time.perf_counter()
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            out = dichotomy(cur, c, with_l2=with_l2)
        step["runtime"] = time.perf_counter() - t0
        step["outcome"] = out.kind
        if isinstance(out, Random):
            trace.stop_reason = "witness-found"
            trace.witness = find_monomial_witness(cur)
            return trace
        if isinstance(out, Undecided):
            step["checks"] = {k: v for k, v in out.diagnostics.items() if isinstance(v, (bool, int, float, str))}
            trace.stop_reason = "undecided"
            return trace
        step["grid"] = out.grid
        nxt, M_next = rescale_to_subproblem(cur, out.grid)
        step["checks"] = {
            "M_next_ok": bool(M_next >= consts.c_lab * delta ** (2 * cur.k + 1) * cur.M),
            "delta_next_ok": bool(nxt.density >= delta + consts.c_lab * delta**cur.k),
            "L_condition": bool(out.L_condition),
        }
        cur = nxt
    trace.stop_reason = "step-limit"
    return trace


# ---------------------------------------------------------------------------
# final bound


def bound_calculator(M, k: int, C=1) -> dict:
    """Largest delta in (0, 1] with log M <= C delta^-(k-1) log(1/delta), by bisection,
    next to the closed form (log log M / log M)^(1/(k-1))."""
    if M < 16:
        raise ValueError(f"M={M} < 16 is outside the domain")
    C = float(C)
    logM = math.log(M)
    g = lambda d: C * d ** (-(k - 1)) * math.log(1 / d)
    lo, hi = 1e-300, 1.0
    # g decreases from +inf to 0 on (0, 1]
    while hi - lo > 1e-12:
        mid = 0.5 * (lo + hi)
        if g(mid) >= logM:
            lo = mid
        else:
            hi = mid
    closed = (math.log(logM) / logM) ** (1 / (k - 1))
    return {"bisection": lo, "closed_form": closed, "ratio": lo / closed, "M": M, "k": k, "C": C}
