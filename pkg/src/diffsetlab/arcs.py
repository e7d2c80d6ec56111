"""Major and minor boxes for Weyl sums, complete sums, oscillatory integrals.

Nothing here asserts an inequality whose constant is unknown.  Each harness
returns the empirical constant it observed; fixture tables keep those numbers
under version control so drift shows up in tests.
"""
from __future__ import annotations

import csv
import math
import os
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from functools import reduce
from itertools import product
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy import integrate

from .core import as_fraction
from .fourier import exponential_sum, weyl_sum

__all__ = [
    "PreconditionError",
    "QuadratureError",
    "MajorBoxSpec",
    "torus_distance",
    "classify_frequency",
    "major_axis_masks",
    "gauss_sum",
    "hua_ratio_table",
    "oscillatory_integral",
    "vdc_ratio",
    "weyl_inequality_ratio",
    "weyl_ratio_table",
    "verify_minor_estimate",
    "verify_major_estimate",
    "fit_minor_exponent",
    "decomposition_gap",
    "fixtures_dir",
    "read_fixture",
    "write_fixture",
]


class PreconditionError(ValueError):
    pass


class QuadratureError(RuntimeError):
    def __init__(self, msg, estimate, error):
        super().__init__(f"{msg} (estimate {estimate}, error {error:.3g})")
        self.estimate = estimate
        self.error = error


def torus_distance(x: Fraction) -> Fraction:
    """Distance from x to the nearest integer, exactly."""
    x = as_fraction(x) % 1
    return min(x, 1 - x)


def _vector_gcd(a: Sequence[int], q: int) -> int:
    return reduce(math.gcd, (int(x) for x in a), int(q))


@dataclass(frozen=True)
class MajorBoxSpec:
    """The box around a/q of half-width 1/(eta^k M^j) on axis j.

    With ``mu`` set, the half-width is instead N^mu / N^j (here N is ``M``),
    the variant used for the unrefined major arcs.  ``coprime`` records whether
    gcd(a_1, ..., a_k, q) = 1 is demanded.
    """

    q: int
    a: tuple[int, ...]
    eta: Fraction
    M: int
    k: int
    coprime: bool = False
    mu: Fraction | None = None

    def __post_init__(self):
        object.__setattr__(self, "a", tuple(int(x) for x in self.a))
        object.__setattr__(self, "eta", as_fraction(self.eta))
        if self.mu is not None:
            object.__setattr__(self, "mu", as_fraction(self.mu))
        if self.q < 1 or len(self.a) != self.k or any(not 1 <= x <= self.q for x in self.a):
            raise ValueError(f"need q >= 1 and a in [1, q]^{self.k}")
        if self.coprime and _vector_gcd(self.a, self.q) != 1:
            raise ValueError(f"gcd(a, q) != 1 for a={self.a}, q={self.q}")

    def half_width(self, j: int) -> Fraction:
        return 1 / (self.eta**self.k * Fraction(self.M) ** j)

    def contains(self, alpha: Sequence) -> bool:
        for j, (x, aj) in enumerate(zip(alpha, self.a), start=1):
            dist = torus_distance(as_fraction(x) - Fraction(aj, self.q))
            if self.mu is None:
                if dist > self.half_width(j):
                    return False
            else:
                if not _within_unrefined(dist, self.M, j, self.mu):
                    return False
        return True


def _nearest_numerators(x: Fraction, q: int, width: Fraction) -> list[int]:
    """All a in [1, q] with ||x - a/q|| <= width."""
    c = x * q
    lo, hi = math.ceil(c - q * width), math.floor(c + q * width)
    if hi - lo + 1 >= q:
        return list(range(1, q + 1))
    return sorted({(a - 1) % q + 1 for a in range(lo, hi + 1)})


def classify_frequency(alpha: Sequence, eta, M: int, k: int, C_lab=1, coprime: bool = False):
    """Least q <= eta^-k with alpha in M_q(eta), as a MajorBoxSpec; None for minor.

    The witness a takes the lexicographically least admissible numerators.
    """
    eta = as_fraction(eta)
    if eta <= 0 or eta > 1:
        raise ValueError(f"eta={eta}: need 0 < eta <= 1 so that eta^-k >= 1")
    if len(alpha) != k:
        raise ValueError(f"alpha must have {k} coordinates")
    if M < (1 / eta) ** as_fraction(C_lab):
        warnings.warn(f"M={M} below eta^-C_lab; the major/minor estimates need not bind", stacklevel=2)
    alpha = [as_fraction(x) for x in alpha]
    Q = math.floor(eta ** (-k))
    for q in range(1, Q + 1):
        cands = []
        for j, x in enumerate(alpha, start=1):
            c = _nearest_numerators(x, q, 1 / (eta**k * Fraction(M) ** j))
            if not c:
                break
            cands.append(c)
        else:
            for a in product(*cands):
                if not coprime or _vector_gcd(a, q) == 1:
                    return MajorBoxSpec(q, a, eta, M, k, coprime)
    return None


def major_axis_masks(q: int, eta, M: int, k: int, T: Sequence[int], widen: int = 0) -> list[np.ndarray]:
    """Per-axis membership of the lattice xi_j / T_j in M_q(eta).

    M_q is a product over axes (a ranges over all of [1, q]^k), so the full
    mask is the outer product of these.  The test is exact integer arithmetic:
    ||q xi / T|| / q <= 1/(eta^k M^j).  ``widen`` moves the half-width out
    (or in, if negative) by that many lattice steps.
    """
    eta = as_fraction(eta)
    n, d = eta.numerator, eta.denominator
    out = []
    for j, t in enumerate(T, start=1):
        scale = M**j * n**k
        rhs = q * t * d**k + widen * q * scale
        big = max(t * scale, abs(rhs)) >= 2**62
        xi = np.arange(t, dtype=np.int64)
        r = (q * xi) % t
        dist = np.minimum(r, t - r)
        if big:
            dist = dist.astype(object)
        out.append(np.asarray(dist * scale <= rhs, dtype=bool))
    return out


# ---------------------------------------------------------------------------
# complete sums


def gauss_sum(a: Sequence[int], q: int, k: int | None = None) -> complex:
    """S(a, q) = sum_{r=0}^{q-1} e^{2 pi i (a_1 r + ... + a_k r^k) / q}."""
    if q < 1:
        raise ValueError("q must be positive")
    a = [int(x) for x in a]
    if k is not None and len(a) != k:
        raise ValueError(f"a must have {k} entries")
    r = np.arange(q, dtype=np.int64)
    if q < 2**31:
        ph = np.zeros(q, dtype=np.int64)
        p = np.ones(q, dtype=np.int64)
        for c in a:
            p = p * r % q
            ph = (ph + (c % q) * p) % q
        theta = 2 * np.pi * ph / q
    else:
        theta = 2 * np.pi * np.array([sum(c * pow(x, j, q) for j, c in enumerate(a, 1)) % q for x in range(q)]) / q
    return complex(math.fsum(np.cos(theta)), math.fsum(np.sin(theta)))


def _units(q: int) -> np.ndarray:
    u = np.arange(1, q + 1)
    return u[np.gcd(u, q) == 1]


def _hua_rows(q: int, k: int, rng: np.random.Generator, n_random: int):
    r = np.arange(q, dtype=np.int64)
    rk = np.ones(q, dtype=np.int64)
    powers = []
    for _ in range(k):
        rk = rk * r % q
        powers.append(rk.copy())
    # leading coefficient a unit, lower coefficients zero
    units = _units(q) % q
    ph = units[:, None] * powers[-1][None, :] % q
    vals = np.abs(np.exp(2j * np.pi * ph / q).sum(axis=1))
    best = float(vals.max())
    # random full vectors with gcd(a, q) = 1
    for _ in range(n_random):
        while True:
            a = rng.integers(0, q, size=k) if q > 1 else np.zeros(k, dtype=np.int64)
            if _vector_gcd(list(a), q) == 1:
                break
        best = max(best, abs(gauss_sum(a, q)))
    return best


def hua_ratio_table(q_max: int, k: int, seed: int = 0, n_random: int = 8) -> list[tuple[int, float]]:
    """(q, max |S(a, q)| / q^(1 - 1/k)) over coprime a, for q = 1..q_max.

    The maximum runs over all units a_k with lower coefficients zero and
    ``n_random`` seeded random full vectors per q.
    """
    rng = np.random.default_rng([seed, k])
    return [(q, _hua_rows(q, k, rng, n_random) / q ** (1 - 1 / k)) for q in range(1, q_max + 1)]


# ---------------------------------------------------------------------------
# oscillatory integrals


def _poly_phase(beta: Sequence[float], x):
    acc = 0.0
    for c in reversed(beta):
        acc = (acc + c) * x
    return acc


def _phase_panels(beta, N: float) -> int:
    total = sum(abs(b) * N**j for j, b in enumerate(beta, start=1))
    return max(1, math.ceil(2 * total))


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(20)


def _gl_composite(beta, N: float, panels: int) -> complex:
    edges = np.linspace(0.0, N, panels + 1)
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * (edges[1:] - edges[:-1])
    x = mid[:, None] + half[:, None] * _GL_NODES[None, :]
    f = np.exp(2j * np.pi * _poly_phase(beta, x))
    return complex(np.sum(half[:, None] * _GL_WEIGHTS[None, :] * f))


def oscillatory_integral(beta: Sequence[float], N: float, k: int | None = None, scheme: str = "gk",
                         tol: float | None = None, max_panels: int = 2**22) -> complex:
    """v_N(beta) = int_0^N e^{2 pi i (beta_1 x + ... + beta_k x^k)} dx.

    ``"gk"`` runs adaptive Gauss-Kronrod (QUADPACK) on panels holding at most
    half an oscillation each; ``"gl"`` is composite 20-point Gauss-Legendre on
    the same kind of panels, doubled until two successive values agree.
    Absolute tolerance defaults to 1e-8 N.
    """
    beta = [float(b) for b in beta]
    if k is not None and len(beta) != k:
        raise ValueError(f"beta must have {k} coordinates")
    if N < 1:
        raise ValueError("N must be at least 1")
    tol = 1e-8 * N if tol is None else tol
    if not any(beta):
        return complex(N)
    panels = _phase_panels(beta, N)
    if scheme == "gk":
        if panels > max_panels:
            raise QuadratureError("too many phase panels", float("nan"), float("inf"))
        edges = np.linspace(0.0, N, panels + 1)
        f = lambda x: np.exp(2j * np.pi * _poly_phase(beta, x))
        parts, errs = [], []
        per = tol / (2 * panels)
        for lo, hi in zip(edges[:-1], edges[1:]):
            val, err = integrate.quad(f, lo, hi, epsabs=per, epsrel=0, limit=200, complex_func=True)
            parts.append(val)
            errs.append(abs(err))
        est = complex(math.fsum(p.real for p in parts), math.fsum(p.imag for p in parts))
        err = float(sum(errs))
        if err > tol:
            raise QuadratureError("Gauss-Kronrod panels did not reach tolerance", est, err)
        return est
    if scheme == "gl":
        prev = _gl_composite(beta, N, panels)
        while panels <= max_panels:
            panels *= 2
            cur = _gl_composite(beta, N, panels)
            if abs(cur - prev) <= tol / 10:
                return cur
            prev = cur
        raise QuadratureError("Gauss-Legendre refinement limit", prev, abs(cur - prev))
    raise ValueError(f"unknown scheme {scheme!r}")


def vdc_ratio(beta: Sequence[float], N: float, k: int | None = None, scheme: str = "gk") -> float:
    """|v_N(beta)| (1 + sum_j N^j |beta_j|)^(1/k) / N, the observed van der Corput constant."""
    k = len(beta) if k is None else k
    v = oscillatory_integral(beta, N, k, scheme)
    s = 1 + sum(N**j * abs(b) for j, b in enumerate(beta, start=1))
    return abs(v) * s ** (1 / k) / N


# ---------------------------------------------------------------------------
# Weyl sums against their bounds


@dataclass(frozen=True)
class WeylRatio:
    lhs: float
    rhs: float
    ratio: float
    N: int
    q: int


def weyl_inequality_ratio(a: int, q: int, alpha_rest: Sequence, N: int, k: int, eps_exp=0,
                          alpha_k=None) -> WeylRatio:
    """|sum_{d<=N} e(P(alpha, d))| against N^(1+eps) (1/q + 1/N + q/N^k)^(1/2^(k-1)).

    alpha_k defaults to a/q; ``alpha_rest`` holds alpha_1..alpha_{k-1}.
    """
    if q < 1 or math.gcd(a, q) != 1:
        raise PreconditionError(f"need gcd(a, q) = 1, got a={a}, q={q}")
    if len(alpha_rest) != k - 1:
        raise ValueError(f"alpha_rest must have {k - 1} entries")
    ak = Fraction(a, q) if alpha_k is None else as_fraction(alpha_k)
    if abs(ak - Fraction(a, q)) > Fraction(1, q * q):
        raise PreconditionError("|alpha_k - a/q| exceeds q^-2")
    lhs = abs(exponential_sum(list(alpha_rest) + [ak], N, sign=1))
    rhs = N ** (1 + float(eps_exp)) * (1 / q + 1 / N + q / N**k) ** (1 / 2 ** (k - 1))
    return WeylRatio(lhs, rhs, lhs / rhs, N, q)


def weyl_ratio_table(Ns: Sequence[int], k: int = 2, seed: int = 0, trials: int = 4) -> list[dict]:
    """Seeded sweep: for each N, q near sqrt(N) coprime to a random a, lower coefficients random dyadic."""
    rows = []
    for N in Ns:
        rng = np.random.default_rng([seed, N, k])
        for t in range(trials):
            q = int(rng.integers(max(2, math.isqrt(N) // 2), math.isqrt(N) * 2 + 1))
            a = int(rng.integers(1, q))
            while math.gcd(a, q) != 1:
                a = int(rng.integers(1, q))
            rest = [Fraction(int(x), 2**32) for x in rng.integers(0, 2**32, size=k - 1)]
            w = weyl_inequality_ratio(a, q, rest, N, k)
            rows.append({"k": k, "N": N, "q": q, "a": a, "trial": t, "lhs": w.lhs, "rhs": w.rhs,
                         "ratio": w.ratio, "seed": seed})
    return rows


def _random_alpha(rng: np.random.Generator, k: int, bits: int = 40) -> list[Fraction]:
    return [Fraction(int(x), 2**bits) for x in rng.integers(0, 2**bits, size=k)]


@dataclass
class MinorReport:
    eta: Fraction
    M: int
    k: int
    size_S: int
    n_minor: int
    n_major: int
    max_ratio: float
    calibration_events: int
    seed: int
    ratios: list = field(default_factory=list, repr=False)


def verify_minor_estimate(eta, M: int, k: int, trials: int, seed: int = 0, eps=None, C_lab=1) -> MinorReport:
    """Sample frequencies, drop the major ones, report max |1_S^(alpha)| / (eta |S|)."""
    eta = as_fraction(eta)
    eps = Fraction(1, 10 * k) if eps is None else as_fraction(eps)
    D = math.floor(eps * M)
    rng = np.random.default_rng(seed)
    ratios = []
    n_major = 0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for _ in range(trials):
            alpha = _random_alpha(rng, k)
            if classify_frequency(alpha, eta, M, k) is not None:
                n_major += 1
                continue
            ratios.append(abs(weyl_sum(alpha, M, eps, k)) / (float(eta) * D))
    mx = max(ratios, default=0.0)
    events = sum(r > float(C_lab) for r in ratios)
    return MinorReport(eta, M, k, D, len(ratios), n_major, mx, events, seed, ratios)


@dataclass
class MajorReport:
    q: int
    eta: Fraction
    M: int
    k: int
    size_S: int
    samples: int
    max_ratio: float
    max_ratio_refined: float
    refined_le_plain: bool
    seed: int


def verify_major_estimate(q: int, eta, M: int, k: int, samples: int = 64, seed: int = 0, eps=None,
                          include_centre: bool = True) -> MajorReport:
    """Sample alpha = a/q + beta in M_q with gcd(a, q) = 1.

    Reports max |1_S^(alpha)| q^(1/k) / |S| and the same against the refined
    bound |S| q^(-1/k) (1 + sum_j |S|^j |beta_j|)^(-1/k); the refined bound
    never exceeds the plain one.
    """
    eta = as_fraction(eta)
    if not 1 <= q <= math.floor(eta ** (-k)):
        raise ValueError(f"q={q} outside [1, eta^-k]")
    eps = Fraction(1, 10 * k) if eps is None else as_fraction(eps)
    D = math.floor(eps * M)
    rng = np.random.default_rng([seed, q])
    plain = refined = 0.0
    ok = True
    for s in range(samples):
        while True:
            a = [int(x) for x in rng.integers(1, q + 1, size=k)]
            if _vector_gcd(a, q) == 1:
                break
        if include_centre and s == 0:
            beta = [Fraction(0)] * k
        else:
            beta = [Fraction(int(x), 2**30) / (eta**k * Fraction(M) ** j)
                    for j, x in enumerate(rng.integers(-(2**30), 2**30 + 1, size=k), start=1)]
        alpha = [Fraction(aj, q) + b for aj, b in zip(a, beta)]
        val = abs(weyl_sum(alpha, M, eps, k))
        b_plain = D * q ** (-1 / k)
        factor = (1 + sum(float(D**j * abs(b)) for j, b in enumerate(beta, start=1))) ** (-1 / k)
        b_ref = b_plain * factor
        ok &= b_ref <= b_plain
        plain = max(plain, val / b_plain)
        refined = max(refined, val / b_ref)
    return MajorReport(q, eta, M, k, D, samples, plain, refined, bool(ok), seed)


def _within_unrefined(dist: Fraction, N: int, j: int, mu: Fraction) -> bool:
    # dist <= N^(mu - j)  <=>  (dist N^j)^den <= N^num
    return (dist * N**j) ** mu.denominator <= Fraction(N) ** mu.numerator


def _in_unrefined_major(alpha: Sequence[Fraction], N: int, k: int, mu: Fraction) -> bool:
    """alpha in some M'_{a/q} with gcd(a, q) = 1 and q <= N^mu."""
    Q = 1
    while (Q + 1) ** mu.denominator <= N**mu.numerator:
        Q += 1
    for q in range(1, Q + 1):
        cands = []
        for j, x in enumerate(alpha, start=1):
            loose = Fraction(N ** float(mu - j)) * Fraction(11, 10)
            c = [a for a in _nearest_numerators(x, q, loose)
                 if _within_unrefined(torus_distance(x - Fraction(a, q)), N, j, mu)]
            if not c:
                break
            cands.append(c)
        else:
            if any(_vector_gcd(a, q) == 1 for a in product(*cands)):
                return True
    return False


def fit_minor_exponent(Ns: Sequence[int], k: int = 2, mu=None, trials: int = 32, seed: int = 0) -> dict:
    """Fit nu in max_minor |sum_{d<=N} e(P(alpha, d))| ~ N^(1 - nu) by least squares in log-log."""
    mu = Fraction(1, 4 * k) if mu is None else as_fraction(mu)
    xs, ys = [], []
    for N in Ns:
        rng = np.random.default_rng([seed, N])
        best = 0.0
        for _ in range(trials):
            alpha = _random_alpha(rng, k)
            if _in_unrefined_major(alpha, N, k, mu):
                continue
            best = max(best, abs(exponential_sum(alpha, N, sign=1)))
        if best > 0:
            xs.append(math.log(N))
            ys.append(math.log(best))
    slope, intercept = np.polyfit(xs, ys, 1)
    return {"nu": 1 - float(slope), "log_C": float(intercept), "Ns": list(Ns), "mu": str(mu), "seed": seed}


def decomposition_gap(a: Sequence[int], q: int, D: int) -> tuple[float, float]:
    """(|sum_{d<=D} e(P(a, d)/q) - (D/q) S(a, q)|, q + sqrt D) at a rational point."""
    w = exponential_sum([Fraction(x, q) for x in a], D, sign=1)
    return abs(w - D / q * gauss_sum(a, q)), q + math.sqrt(D)


# ---------------------------------------------------------------------------
# fixture tables

FIXTURE_COLUMNS = ("k", "M_or_N", "q", "eta", "quantity", "empirical_constant", "seed")


def fixtures_dir() -> Path:
    env = os.environ.get("DIFFSETLAB_FIXTURES")
    return Path(env) if env else Path(__file__).parent / "fixtures"


def write_fixture(name: str, rows: Sequence[dict], directory=None) -> Path:
    path = Path(directory or fixtures_dir()) / name
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=FIXTURE_COLUMNS, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({c: r.get(c, "") for c in FIXTURE_COLUMNS})
    return path


def read_fixture(name: str, directory=None) -> list[dict]:
    path = Path(directory or fixtures_dir()) / name
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))
