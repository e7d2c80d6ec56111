"""Domain types and anisotropic-box geometry.

Everything here is exact: coordinates and cardinalities are Python/numpy
integers, densities are :class:`fractions.Fraction`.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "DimensionError",
    "AnisoBox",
    "PointSet",
    "GridSpec",
    "PolynomialFamily",
    "LabConstants",
    "box_volume",
    "enumerate_grid",
    "clip_to_box",
    "monomial_point",
    "write_pointset",
    "read_pointset",
    "grid_to_json",
    "grid_from_json",
    "family_to_json",
    "family_from_json",
]


class DimensionError(ValueError):
    """Raised when a dimension or degree is outside the supported range."""


def as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, str):
        return Fraction(x)
    return Fraction(x)


def monomial_point(d: int, k: int) -> tuple[int, ...]:
    """The lattice point (d, d^2, ..., d^k)."""
    return tuple(d**j for j in range(1, k + 1))


@dataclass(frozen=True)
class AnisoBox:
    """The box [1, M] x [1, M^2] x ... x [1, M^k]."""

    M: int
    k: int

    def __post_init__(self):
        if self.k < 2:
            raise DimensionError(f"dimension k={self.k} must be at least 2")
        if self.M < 1:
            raise ValueError(f"side M={self.M} must be positive")

    @property
    def sides(self) -> tuple[int, ...]:
        return tuple(self.M**j for j in range(1, self.k + 1))

    @property
    def volume(self) -> int:
        return self.M ** (self.k * (self.k + 1) // 2)

    def contains(self, p: Sequence[int]) -> bool:
        return len(p) == self.k and all(1 <= x <= s for x, s in zip(p, self.sides))


def box_volume(box: AnisoBox) -> int:
    return box.volume


def _sorted_unique(points: np.ndarray) -> np.ndarray:
    if len(points) == 0:
        return points
    points = np.unique(points, axis=0)  # lexicographic
    return points


@dataclass(frozen=True, eq=False)
class PointSet:
    """A finite set of lattice points inside an enclosing region.

    ``mode="box"`` means the region is the anisotropic box Q_M;
    ``mode="signed"`` means the cube [-M, M]^k (used for lifted sets, where M
    plays the role of N').
    """

    k: int
    M: int
    points: np.ndarray
    mode: str = "box"

    def __post_init__(self):
        if self.mode not in ("box", "signed"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.k < 1:
            raise DimensionError(f"dimension k={self.k} must be positive")
        if self.mode == "box" and self.k < 2:
            raise DimensionError(f"dimension k={self.k} must be at least 2")
        pts = np.asarray(self.points, dtype=np.int64).reshape(-1, self.k)
        pts = _sorted_unique(pts)
        if len(pts):
            lo, hi = self.bounds
            if (pts < lo).any() or (pts > hi).any():
                raise ValueError("point outside the enclosing region")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @classmethod
    def from_points(cls, points: Iterable[Sequence[int]], M: int, k: int, mode="box"):
        pts = np.array(list(points), dtype=np.int64).reshape(-1, k)
        return cls(k=k, M=M, points=pts, mode=mode)

    @classmethod
    def from_mask(cls, mask: np.ndarray, M: int) -> "PointSet":
        """Box-mode set from a boolean array indexed by (coordinate - 1)."""
        k = mask.ndim
        box = AnisoBox(M, k)
        if mask.shape != box.sides:
            raise ValueError(f"mask shape {mask.shape} != box sides {box.sides}")
        pts = np.argwhere(mask) + 1
        ps = cls(k=k, M=M, points=pts, mode="box")
        ps.__dict__["mask"] = np.array(mask, dtype=bool)
        ps.mask.setflags(write=False)
        return ps

    @classmethod
    def full(cls, M: int, k: int) -> "PointSet":
        return cls.from_mask(np.ones(AnisoBox(M, k).sides, dtype=bool), M)

    @property
    def box(self) -> AnisoBox:
        if self.mode != "box":
            raise ValueError("signed-mode set has no anisotropic box")
        return AnisoBox(self.M, self.k)

    @property
    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        if self.mode == "box":
            return np.ones(self.k, dtype=np.int64), np.array(AnisoBox(self.M, self.k).sides, dtype=np.int64)
        return np.full(self.k, -self.M, dtype=np.int64), np.full(self.k, self.M, dtype=np.int64)

    @property
    def volume(self) -> int:
        if self.mode == "box":
            return self.box.volume
        return (2 * self.M + 1) ** self.k

    @property
    def cardinality(self) -> int:
        return int(len(self.points))

    def __len__(self) -> int:
        return self.cardinality

    @property
    def density(self) -> Fraction:
        return Fraction(self.cardinality, self.volume)

    @cached_property
    def mask(self) -> np.ndarray:
        """Indicator array over the region, indexed by (coordinate - lower bound)."""
        lo, hi = self.bounds
        shape = tuple(int(h - l + 1) for l, h in zip(lo, hi))
        m = np.zeros(shape, dtype=bool)
        if len(self.points):
            m[tuple((self.points - lo).T)] = True
        m.setflags(write=False)
        return m

    def __contains__(self, p) -> bool:
        lo, hi = self.bounds
        p = np.asarray(p, dtype=np.int64)
        if p.shape != (self.k,) or (p < lo).any() or (p > hi).any():
            return False
        return bool(self.mask[tuple(p - lo)])

    def as_tuples(self) -> list[tuple[int, ...]]:
        return [tuple(int(x) for x in p) for p in self.points]

    def __eq__(self, other) -> bool:
        if not isinstance(other, PointSet):
            return NotImplemented
        return (self.k, self.M, self.mode) == (other.k, other.M, other.mode) and np.array_equal(
            self.points, other.points
        )

    def __hash__(self):
        return hash((self.k, self.M, self.mode, self.points.tobytes()))

    def __repr__(self):
        return f"PointSet(k={self.k}, M={self.M}, mode={self.mode!r}, |B|={self.cardinality})"


@dataclass(frozen=True)
class GridSpec:
    """Arithmetic grid {m + sign*(l_1 q, l_2 q^2, ..., l_k q^k) : l in Q_L}."""

    base: tuple[int, ...]
    q: int
    L: int
    sign: int = 1

    def __post_init__(self):
        object.__setattr__(self, "base", tuple(int(x) for x in self.base))
        if self.q < 1 or self.L < 1:
            raise ValueError("grid needs q >= 1 and L >= 1")
        if self.sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")

    @property
    def k(self) -> int:
        return len(self.base)

    @property
    def size(self) -> int:
        return self.L ** (self.k * (self.k + 1) // 2)

    @property
    def steps(self) -> tuple[int, ...]:
        return tuple(self.sign * self.q**j for j in range(1, self.k + 1))

    def point(self, ell: Sequence[int]) -> tuple[int, ...]:
        return tuple(m + l * s for m, l, s in zip(self.base, ell, self.steps))

    def coordinate_ranges(self) -> list[np.ndarray]:
        """Per-axis coordinate values; the grid is their Cartesian product."""
        return [
            self.base[j] + self.steps[j] * np.arange(1, self.L ** (j + 1) + 1, dtype=np.int64)
            for j in range(self.k)
        ]

    def points_array(self) -> np.ndarray:
        axes = np.meshgrid(*self.coordinate_ranges(), indexing="ij")
        return np.stack([a.ravel() for a in axes], axis=1)

    def extent(self) -> tuple[np.ndarray, np.ndarray]:
        ranges = self.coordinate_ranges()
        return np.array([r.min() for r in ranges]), np.array([r.max() for r in ranges])

    def inside(self, box: AnisoBox) -> bool:
        lo, hi = self.extent()
        return bool((lo >= 1).all() and (hi <= np.array(box.sides)).all())


def enumerate_grid(grid: GridSpec) -> PointSet:
    """All points of the grid, as a signed-mode set large enough to hold them.

    Nothing is clipped; use :func:`clip_to_box` for that.
    """
    pts = grid.points_array()
    R = int(np.abs(pts).max()) if len(pts) else 0
    return PointSet(k=grid.k, M=max(R, 1), points=pts, mode="signed")


def clip_to_box(points: PointSet | np.ndarray, box: AnisoBox) -> PointSet:
    pts = points.points if isinstance(points, PointSet) else np.asarray(points, dtype=np.int64)
    sides = np.array(box.sides)
    keep = ((pts >= 1) & (pts <= sides)).all(axis=1)
    return PointSet(k=box.k, M=box.M, points=pts[keep], mode="box")


@dataclass(frozen=True)
class PolynomialFamily:
    """Integer polynomials P_i(d) = c_i1 d + ... + c_ik d^k (zero constant term).

    ``coeffs[i][j-1]`` is the coefficient of d^j in P_i.  Families of degree 1
    are rejected unless ``strict=False``.
    """

    coeffs: tuple[tuple[int, ...], ...]
    strict: bool = field(default=True, compare=False)

    def __post_init__(self):
        rows = tuple(tuple(int(c) for c in row) for row in self.coeffs)
        if not rows:
            raise ValueError("empty polynomial family")
        width = max(len(r) for r in rows)
        rows = tuple(r + (0,) * (width - len(r)) for r in rows)
        k = 0
        for r in rows:
            for j, c in enumerate(r, start=1):
                if c:
                    k = max(k, j)
        rows = tuple(r[: max(k, 1)] for r in rows)
        object.__setattr__(self, "coeffs", rows)
        if k == 0:
            raise ValueError("all polynomials in the family are zero")
        if self.strict and k < 2:
            raise DimensionError("maximal degree k must be at least 2")

    @property
    def ell(self) -> int:
        return len(self.coeffs)

    @property
    def k(self) -> int:
        return len(self.coeffs[0])

    def evaluate(self, d: int) -> tuple[int, ...]:
        return tuple(sum(c * d**j for j, c in enumerate(row, start=1)) for row in self.coeffs)

    def apply(self, b: Sequence[int]) -> tuple[int, ...]:
        """The coefficient matrix applied to a lattice point b in Z^k."""
        return tuple(sum(c * x for c, x in zip(row, b)) for row in self.coeffs)

    def matrix(self) -> np.ndarray:
        return np.array(self.coeffs, dtype=object)

    @classmethod
    def parse(cls, text: str, strict: bool = True) -> "PolynomialFamily":
        """Parse e.g. ``"d^2"`` or ``"d, 2*d^2 - d"``; polynomials separated by commas."""
        return cls(tuple(_parse_poly(p) for p in text.split(",")), strict=strict)

    def __str__(self):
        return ", ".join(_format_poly(r) for r in self.coeffs)


_TERM = re.compile(r"^(?:(\d+)\s*\*?\s*)?(d(?:\s*\^\s*(\d+))?)?$")


def _parse_poly(text: str) -> tuple[int, ...]:
    s = text.replace(" ", "").replace("−", "-").replace("**", "^")
    if not s:
        raise ValueError("empty polynomial")
    terms = re.findall(r"[+-]?[^+-]+", s)
    if "".join(terms) != s:
        raise ValueError(f"cannot parse polynomial {text!r}")
    out: dict[int, int] = {}
    for t in terms:
        sign = -1 if t[0] == "-" else 1
        body = t.lstrip("+-")
        m = _TERM.match(body)
        if not m or (m.group(1) is None and m.group(2) is None):
            raise ValueError(f"cannot parse term {t!r} in {text!r}")
        if m.group(2) is None:
            raise ValueError(f"constant term {t!r} not allowed (P(0) must be 0)")
        c = int(m.group(1)) if m.group(1) else 1
        j = int(m.group(3)) if m.group(3) else 1
        if j < 1:
            raise ValueError(f"constant term {t!r} not allowed (P(0) must be 0)")
        out[j] = out.get(j, 0) + sign * c
    k = max(out)
    return tuple(out.get(j, 0) for j in range(1, k + 1))


def _format_poly(row: Sequence[int]) -> str:
    parts = []
    for j, c in enumerate(row, start=1):
        if c == 0:
            continue
        mono = "d" if j == 1 else f"d^{j}"
        mag = "" if abs(c) == 1 else f"{abs(c)}*"
        parts.append(("-" if c < 0 else "+") + mag + mono)
    s = "".join(parts) or "0"
    return s[1:] if s.startswith("+") else s


@dataclass(frozen=True)
class LabConstants:
    """Configurable stand-ins for the unspecified absolute constants.

    eta and sigma are derived from delta unless overridden explicitly.
    """

    k: int
    delta: Fraction
    eps: Fraction | None = None
    C_lab: Fraction = Fraction(1)
    c_lab: Fraction = Fraction(1)
    eta_override: Fraction | None = None
    sigma_override: Fraction | None = None
    mu: Fraction | None = None
    nu: Fraction | None = None

    def __post_init__(self):
        if self.k < 2:
            raise DimensionError(f"dimension k={self.k} must be at least 2")
        fix = lambda name: object.__setattr__(self, name, as_fraction(getattr(self, name)))
        for name in ("delta", "C_lab", "c_lab"):
            fix(name)
        for name in ("eps", "eta_override", "sigma_override", "mu", "nu"):
            if getattr(self, name) is not None:
                fix(name)
        if self.eps is None:
            object.__setattr__(self, "eps", Fraction(1, 10 * self.k))
        if self.mu is None:
            object.__setattr__(self, "mu", Fraction(1, 4 * self.k))
        if not 0 < self.eps <= Fraction(1, 10 * self.k):
            raise ValueError(f"eps={self.eps} must lie in (0, 1/(10k)]")
        if not 0 <= self.delta <= 1:
            raise ValueError(f"density {self.delta} outside [0, 1]")
        if self.C_lab <= 0 or self.c_lab <= 0:
            raise ValueError("lab constants must be positive")
        for name in ("eta_override", "sigma_override"):
            v = getattr(self, name)
            if v is not None and v <= 0:
                raise ValueError(f"{name} must be positive")

    @property
    def eta(self) -> Fraction:
        if self.eta_override is not None:
            return self.eta_override
        return self.delta / (8 * self.C_lab)

    @property
    def sigma(self) -> Fraction:
        if self.sigma_override is not None:
            return self.sigma_override
        return self.c_lab * self.delta ** (self.k - 1)

    def with_delta(self, delta) -> "LabConstants":
        from dataclasses import replace

        return replace(self, delta=as_fraction(delta))

    @classmethod
    def for_set(cls, B: PointSet, **kw) -> "LabConstants":
        return cls(k=B.k, delta=B.density, **kw)


# ---------------------------------------------------------------------------
# serialization


def write_pointset(B: PointSet, path) -> None:
    lines = [f"{B.k} {B.M} {B.mode}"]
    lines += [" ".join(str(int(x)) for x in p) for p in B.points]
    Path(path).write_text("\n".join(lines) + "\n")


def read_pointset(path) -> PointSet:
    lines = [ln.strip() for ln in Path(path).read_text().splitlines()]
    lines = [ln for ln in lines if ln and not ln.startswith("#")]
    if not lines:
        raise ValueError(f"{path}: missing header line 'k M mode'")
    head = lines[0].split()
    if len(head) != 3:
        raise ValueError(f"{path}: header must be 'k M mode', got {lines[0]!r}")
    k, M, mode = int(head[0]), int(head[1]), head[2]
    pts = [tuple(int(x) for x in ln.split()) for ln in lines[1:]]
    if any(len(p) != k for p in pts):
        raise ValueError(f"{path}: every point needs {k} coordinates")
    return PointSet.from_points(pts, M=M, k=k, mode=mode)


def _jint(x: int):
    # exact-integer strings once a value would lose precision in a JSON double
    return str(x) if abs(x) >= 2**53 else int(x)


def grid_to_json(grid: GridSpec) -> str:
    return json.dumps(
        {
            "base": [_jint(x) for x in grid.base],
            "q": _jint(grid.q),
            "L": _jint(grid.L),
            "sign": grid.sign,
        }
    )


def grid_from_json(text: str) -> GridSpec:
    d = json.loads(text)
    return GridSpec(tuple(int(x) for x in d["base"]), int(d["q"]), int(d["L"]), int(d.get("sign", 1)))


def family_to_json(P: PolynomialFamily) -> str:
    return json.dumps({"coeffs": [[_jint(c) for c in row] for row in P.coeffs]})


def family_from_json(text: str, strict: bool = True) -> PolynomialFamily:
    d = json.loads(text)
    return PolynomialFamily(tuple(tuple(int(c) for c in row) for row in d["coeffs"]), strict=strict)


# ---------------------------------------------------------------------------
# shifted-overlap primitives shared by the counting modules


def _shift_slices(shape: Sequence[int], v: Sequence[int]):
    """Slices (sa, sb) with a[sa] aligned against b[sb] shifted by v, i.e. a[i] * b[i - v]."""
    sa, sb = [], []
    for n, s in zip(shape, v):
        s = int(s)
        if abs(s) >= n:
            return None
        if s >= 0:
            sa.append(slice(s, n))
            sb.append(slice(0, n - s))
        else:
            sa.append(slice(0, n + s))
            sb.append(slice(-s, n))
    return tuple(sa), tuple(sb)


def shifted_overlap(a: np.ndarray, b: np.ndarray, v: Sequence[int]) -> int:
    """sum_i a[i] * b[i - v] for two arrays on the same index box."""
    sl = _shift_slices(a.shape, v)
    if sl is None:
        return 0
    sa, sb = sl
    if a.dtype == bool and b.dtype == bool:
        return int(np.count_nonzero(a[sa] & b[sb]))
    x, y = a[sa], b[sb]
    if x.dtype == object or y.dtype == object:
        return int((x * y).sum())
    return int(np.sum(x.astype(np.int64) * y.astype(np.int64), dtype=np.int64))
