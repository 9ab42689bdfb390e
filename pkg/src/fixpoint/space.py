"""Finite-dimensional ambient space: points, norms and box domains.

Points are read-only 1-d float64 numpy arrays. Every function also accepts
stacked points of shape ``(m, d)`` where that is meaningful, operating along
the last axis.
"""

from __future__ import annotations

import enum
import itertools
import math
from operator import le
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, ParamError

Point = np.ndarray


class Norm(str, enum.Enum):
    EUCLIDEAN = "euclidean"
    MAX = "max"
    ONE = "one"

    def __call__(self, v: np.ndarray) -> np.ndarray | float:
        v = np.asarray(v, dtype=float)
        if v.ndim == 1:
            # Small single vectors: plain Python is several times faster than a numpy reduction.
            c = v.tolist()
            if self is Norm.EUCLIDEAN:
                return math.hypot(*c)
            if self is Norm.MAX:
                return float(max(map(abs, c)))
            return float(sum(map(abs, c)))
        if self is Norm.EUCLIDEAN:
            out = np.sqrt(np.sum(v * v, axis=-1))
        elif self is Norm.MAX:
            out = np.max(np.abs(v), axis=-1)
        else:
            out = np.sum(np.abs(v), axis=-1)
        return float(out) if np.ndim(out) == 0 else out


def point(coords) -> Point:
    """Build an immutable point, rejecting non-finite or empty coordinates."""
    x = np.array(coords, dtype=float).reshape(-1)
    if x.size == 0:
        raise DimensionError("a point needs at least one coordinate")
    if not np.all(np.isfinite(x)):
        raise ParamError(f"point has non-finite coordinates: {x.tolist()}")
    x.flags.writeable = False
    return x


def _check_dims(x: np.ndarray, d: int, what: str = "point") -> None:
    if x.ndim == 0 or x.shape[-1] != d:
        raise DimensionError(f"{what} has shape {x.shape}, expected dimension {d}")


def distance(x, y, norm: Norm = Norm.EUCLIDEAN) -> float:
    """``norm(x - y)``; raises DimensionError on mismatched shapes."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape[-1] != y.shape[-1]:
        raise DimensionError(f"dimensions differ: {x.shape[-1]} vs {y.shape[-1]}")
    return Norm(norm)(x - y)


@dataclass(frozen=True, eq=False)
class BoxDomain:
    """Axis-aligned closed box ``lower <= x <= upper`` (faces may be degenerate)."""

    lower: Point
    upper: Point

    def __post_init__(self):
        lo, hi = point(self.lower), point(self.upper)
        if lo.size != hi.size:
            raise DimensionError("lower and upper corners differ in dimension")
        if np.any(lo > hi):
            raise ParamError(f"empty box: lower {lo.tolist()} exceeds upper {hi.tolist()}")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)
        object.__setattr__(self, "_bounds", (tuple(lo.tolist()), tuple(hi.tolist())))

    def contains_point(self, x: np.ndarray) -> bool:
        """Membership of a single 1-d float array, without shape checks."""
        c = x.tolist()
        lo, hi = self._bounds
        return all(map(le, lo, c)) and all(map(le, c, hi))

    @classmethod
    def cube(cls, lo: float, hi: float, dim: int = 1) -> "BoxDomain":
        return cls(np.full(dim, lo), np.full(dim, hi))

    @property
    def dimension(self) -> int:
        return self.lower.size

    @property
    def center(self) -> Point:
        return point(0.5 * (self.lower + self.upper))

    def diameter(self, norm: Norm = Norm.EUCLIDEAN) -> float:
        return Norm(norm)(self.upper - self.lower)

    def corners(self) -> list[Point]:
        return [point(c) for c in itertools.product(*zip(self.lower, self.upper))]

    def sample(self, rng: np.random.Generator, m: int) -> np.ndarray:
        """``m`` points drawn uniformly from the box, shape ``(m, d)``."""
        return self.lower + (self.upper - self.lower) * rng.random((m, self.dimension))

    def grid(self, resolution: int) -> np.ndarray:
        axes = [np.linspace(lo, hi, resolution) for lo, hi in zip(self.lower, self.upper)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.reshape(-1) for m in mesh], axis=-1)

    def __eq__(self, other):
        if not isinstance(other, BoxDomain):
            return NotImplemented
        return np.array_equal(self.lower, other.lower) and np.array_equal(self.upper, other.upper)

    def __hash__(self):
        return hash((self.lower.tobytes(), self.upper.tobytes()))


def contains(x, E: BoxDomain) -> bool:
    """Exact membership test, boundary included."""
    x = np.asarray(x, dtype=float)
    _check_dims(x, E.lower.size)
    if x.ndim == 1:
        return E.contains_point(x)
    return bool((E.lower <= x).all() and (x <= E.upper).all())


def project(x, E: BoxDomain) -> Point | np.ndarray:
    """Coordinatewise clamp onto the box; points already inside are returned unchanged."""
    x = np.asarray(x, dtype=float)
    _check_dims(x, E.lower.size)
    out = np.minimum(np.maximum(x, E.lower), E.upper)
    if out.ndim == 1:
        out.flags.writeable = False
    return out
