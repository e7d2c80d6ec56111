"""Naive oracles shared by the test modules.

Each oracle takes a deliberately different route from the library code it
checks: python sets and explicit loops instead of array shifts or FFTs.
"""
from __future__ import annotations

import cmath
import itertools
import math
from fractions import Fraction

import numpy as np
import pytest

from diffsetlab.core import AnisoBox, PointSet


def naive_monomial_count(B: PointSet, D: int) -> int:
    """#{(b, d) : b in B, 1 <= d <= D, b - (d, ..., d^k) in B}, by encoded-key lookup."""
    pts = B.points.astype(np.int64)
    sides = np.array(AnisoBox(B.M, B.k).sides, dtype=np.int64)
    radix = np.concatenate([[1], np.cumprod(sides + 1)[:-1]])
    keys = np.sort(pts @ radix)
    total = 0
    for d in range(1, D + 1):
        v = np.array([d**j for j in range(1, B.k + 1)], dtype=np.int64)
        shifted = pts - v
        ok = (shifted >= 1).all(axis=1)
        sk = shifted[ok] @ radix
        pos = np.searchsorted(keys, sk)
        pos = np.minimum(pos, len(keys) - 1)
        total += int((keys[pos] == sk).sum())
    return total


def naive_balance_numerators(B: PointSet) -> np.ndarray:
    """|Q| 1_B - |B| on the box, as python ints."""
    box = AnisoBox(B.M, B.k)
    arr = np.full(box.sides, -B.cardinality, dtype=object)
    for p in B.as_tuples():
        arr[tuple(x - 1 for x in p)] += box.volume
    return arr


def naive_weighted_count(B: PointSet, D: int) -> Fraction:
    """sum_{m - n in S} f(m) f(n) as an exact rational, looping over the window."""
    num = naive_balance_numerators(B)
    vol = AnisoBox(B.M, B.k).volume
    total = 0
    for d in range(1, D + 1):
        v = [d**j for j in range(1, B.k + 1)]
        if any(x >= s for x, s in zip(v, num.shape)):
            continue
        hi = tuple(slice(x, None) for x in v)
        lo = tuple(slice(0, s - x) for x, s in zip(v, num.shape))
        total += int((num[hi] * num[lo]).sum())
    return Fraction(total, vol * vol)


def naive_gauss(a, q: int) -> complex:
    acc = 0j
    for x in range(q):
        ph = sum(c * pow(x, j, q) for j, c in enumerate(a, start=1)) % q
        acc += cmath.exp(2j * math.pi * ph / q)
    return acc


def brute_max_free(N: int, forbidden: set[int]) -> int:
    """Largest subset of [1, N] with no pairwise difference in ``forbidden``, by full enumeration."""
    for size in range(N, 0, -1):
        for S in itertools.combinations(range(1, N + 1), size):
            if all(b - a not in forbidden for a, b in itertools.combinations(S, 2)):
                return size
    return 0


def brute_config(A, vals_for_d, d_range) -> bool:
    Aset = set(A)
    diffs = {a - b for a in Aset for b in Aset}
    return any(all(v in diffs for v in vals_for_d(d)) for d in d_range if d != 0)


def random_box_set(rng: np.random.Generator, M: int, k: int, density: float | None = None) -> PointSet:
    p = rng.uniform(0.05, 0.9) if density is None else density
    mask = rng.random(AnisoBox(M, k).sides) < p
    return PointSet.from_mask(mask, M)


def load_extremal() -> dict[int, int]:
    from diffsetlab.arcs import read_fixture

    return {int(r["M_or_N"]): int(r["empirical_constant"]) for r in read_fixture("extremal_d2.csv")}


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


# one line per acceptance criterion, echoed at the end of the session
ACCEPTANCE_LINES: list[str] = []


def report(n: int, ok: bool, detail: str) -> None:
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'} {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
