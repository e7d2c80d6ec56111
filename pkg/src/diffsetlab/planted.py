"""Constructed test sets: random sets and sets with a planted grid structure."""
from __future__ import annotations

import numpy as np

from .core import AnisoBox, GridSpec, PointSet

__all__ = ["random_set", "parabola_free_mask", "planted_coset_set", "embed_in_grid", "PLANTED_PRIMES"]

PLANTED_PRIMES = (37, 41, 43, 47, 53)


def random_set(M: int, k: int, delta: float, seed: int) -> PointSet:
    rng = np.random.default_rng(seed)
    mask = rng.random(AnisoBox(M, k).sides) < delta
    return PointSet.from_mask(mask, M)


def parabola_free_mask(shape: tuple[int, int], p: int, c: int = 0) -> np.ndarray:
    """{(a, b) : b = a^2 + c mod p} on [1, shape_0] x [1, shape_1].

    For a prime p > shape_0 this contains no difference (e, e^2) with e != 0:
    b - b' - e^2 = 2 a' e mod p, which vanishes only if p divides a' or e.
    """
    a = np.arange(1, shape[0] + 1)[:, None]
    b = np.arange(1, shape[1] + 1)[None, :]
    return (b - a * a - c) % p == 0


def planted_coset_set(M: int, q0: int, p: int, c: int = 0, residues=(0, 0), levels: int = 1) -> PointSet:
    """Subset of Q_M (k = 2) living on the coset x = r (mod (Q, Q^2)), Q = q0^levels.

    In coset coordinates it is the parabola pattern above, so the set has no
    monomial difference at all, while its density on any q0-grid through the
    coset is far above average.
    """
    Q = q0**levels
    sides = AnisoBox(M, 2).sides
    mask = np.zeros(sides, dtype=bool)
    r1, r2 = residues
    x1 = np.arange(1, sides[0] + 1)
    x2 = np.arange(1, sides[1] + 1)
    on1 = x1[(x1 - r1) % Q == 0]
    on2 = x2[(x2 - r2) % (Q * Q) == 0]
    if p <= len(on1):
        raise ValueError(f"p={p} must exceed the coset width {len(on1)}")
    pat = parabola_free_mask((len(on1), len(on2)), p, c)
    mask[np.ix_(on1 - 1, on2 - 1)] = pat
    return PointSet.from_mask(mask, M)


def embed_in_grid(B_star: PointSet, grid: GridSpec, M: int, extra: np.ndarray | None = None) -> PointSet:
    """Image of B_star under l -> grid.point(l), as a subset of Q_M (plus optional extra points)."""
    pts = B_star.points
    img = np.array(grid.base)[None, :] + pts * np.array(grid.steps)[None, :]
    if extra is not None and len(extra):
        img = np.concatenate([img, np.asarray(extra, dtype=np.int64)])
    return PointSet(k=B_star.k, M=M, points=img, mode="box")
