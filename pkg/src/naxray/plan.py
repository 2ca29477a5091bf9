"""Ray families for exact layer-stripping of piecewise-constant fields.

For every cell of the ball the plan holds one ray that crosses the cell along
a short chord near its outermost vertex and stays clear of every cell that
has not been recovered yet. Cells are peeled in layers: each layer holds the
remaining cells owning a vertex at maximal distance from the slice origin.
For d >= 3 the construction runs independently on every planar slice
``(x1, x2, z3, ..., zd)``.
"""
from __future__ import annotations

import hashlib
import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

from .errors import DomainError
from .geometry import (
    HALF,
    CellChord,
    Ray,
    ball_bound,
    box_interval,
    cell_box,
    cell_chords,
    format_rational,
    in_ball,
    parse_rational,
    primitive_direction,
)
from .jsonio import FORMAT_TAG, dumps

__all__ = ["PlanEntry", "StarPlan", "build_star_plan", "slice_layers"]

LOG2 = math.log(2.0)
MAX_HALVINGS = 64


@dataclass(frozen=True)
class PlanEntry:
    z: tuple
    layer: int
    x: tuple
    y: tuple
    epsilon: Fraction
    ray: Ray
    chords: tuple

    @property
    def slice(self) -> tuple:
        return self.z[2:]

    @property
    def own_length(self) -> float:
        for c in self.chords:
            if c.cell == self.z:
                return c.length
        raise DomainError(f"plan ray for {self.z} does not cross its own cell")


@dataclass(eq=False)
class StarPlan:
    r: float
    M: float
    d: int
    entries: list

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def depth(self) -> int:
        """Largest layer index over all slices."""
        return max((e.layer for e in self.entries), default=0)

    def layer_cells(self, j: int, slice_: tuple | None = None) -> list:
        return [e.z for e in self.entries
                if e.layer == j and (slice_ is None or e.slice == slice_)]

    def truncated(self, j: int) -> "StarPlan":
        """Plan restricted to layers 1..j of every slice."""
        return StarPlan(self.r, self.M, self.d, [e for e in self.entries if e.layer <= j])

    def to_json(self) -> dict:
        return {
            "format": FORMAT_TAG,
            "r": float(self.r),
            "M": float(self.M),
            "d": self.d,
            "entries": [
                {
                    "z": list(e.z),
                    "layer": e.layer,
                    "x": [format_rational(v) for v in e.x],
                    "y": [format_rational(v) for v in e.y],
                    "epsilon": format_rational(e.epsilon),
                    "dir": list(e.ray.dir),
                    "chords": [
                        {
                            "cell": list(c.cell),
                            "length": c.length,
                            "t_enter": format_rational(c.t_enter),
                            "t_exit": format_rational(c.t_exit),
                        }
                        for c in e.chords
                    ],
                }
                for e in self.entries
            ],
        }

    def digest(self) -> str:
        return hashlib.sha256(dumps(self.to_json()).encode()).hexdigest()

    @classmethod
    def from_json(cls, doc: dict) -> "StarPlan":
        if not isinstance(doc, dict) or doc.get("format") != FORMAT_TAG:
            raise DomainError(f"plan document is not tagged {FORMAT_TAG!r}")
        try:
            entries = []
            for e in doc["entries"]:
                y = tuple(parse_rational(v) for v in e["y"])
                chords = tuple(
                    CellChord(
                        tuple(c["cell"]),
                        float(c["length"]),
                        parse_rational(c["t_enter"]) if "t_enter" in c else Fraction(0),
                        parse_rational(c["t_exit"]) if "t_exit" in c else Fraction(0),
                    )
                    for c in e["chords"]
                )
                entries.append(PlanEntry(
                    tuple(e["z"]), int(e["layer"]),
                    tuple(parse_rational(v) for v in e["x"]), y,
                    parse_rational(e.get("epsilon", "0")),
                    Ray(y, tuple(e["dir"])), chords,
                ))
            return cls(float(doc["r"]), float(doc["M"]), int(doc["d"]), entries)
        except (KeyError, TypeError) as exc:
            raise DomainError(f"malformed plan document: missing or bad {exc}") from None


def _far_vertex_norm4(z) -> int:
    """4 * squared norm of the vertex of the closed cell farthest from 0."""
    return (2 * abs(z[0]) + 1) ** 2 + (2 * abs(z[1]) + 1) ** 2


def slice_layers(bound: int) -> list:
    """Peel the planar cells ``|z|^2 <= bound`` into layers by outermost vertex."""
    remaining = {
        (a, b)
        for a in range(-math.isqrt(bound), math.isqrt(bound) + 1)
        for b in range(-math.isqrt(bound), math.isqrt(bound) + 1)
        if a * a + b * b <= bound
    }
    layers = []
    while remaining:
        top = max(_far_vertex_norm4(z) for z in remaining)
        layer = sorted(z for z in remaining if _far_vertex_norm4(z) == top)
        layers.append(layer)
        remaining.difference_update(layer)
    return layers


def _far_vertex(z) -> tuple:
    """Lexicographically largest vertex of the closed cell at maximal norm."""
    best = None
    for sx, sy in itertools.product((-HALF, HALF), repeat=2):
        v = (z[0] + sx, z[1] + sy)
        key = (v[0] ** 2 + v[1] ** 2, v)
        if best is None or key > best:
            best = key
    return best[1]


def _epsilon_cap(z) -> Fraction:
    """Largest epsilon keeping ``(1 - epsilon) x(z)`` inside the open cell."""
    return min(Fraction(1), 1 / (max(abs(z[0]), abs(z[1])) + HALF))


def _choose_ray(z, x, blockers, M):
    direction = primitive_direction((-2 * x[1], 2 * x[0]))
    box_lo, box_hi = cell_box(z)
    eps = _epsilon_cap(z) / 2
    bound = LOG2 / M
    for _ in range(MAX_HALVINGS):
        y = ((1 - eps) * x[0], (1 - eps) * x[1])
        ray = Ray(y, direction)
        span = box_interval(ray, box_lo, box_hi)
        if span is not None:
            length = float(span[1] - span[0]) * ray.dir_norm
            if 0 < length < bound and not any(
                box_interval(ray, *cell_box(c)) is not None for c in blockers
            ):
                return eps, y, direction
        eps /= 2
    raise DomainError(f"no admissible ray for cell {z} after {MAX_HALVINGS} halvings")


def build_star_plan(r, M: float, d: int = 2) -> StarPlan:
    """Build the per-cell reconstruction rays for the ball of radius ``r``.

    Every ray crosses its own cell with a chord shorter than ``log(2)/M``
    and keeps positive distance from every other cell of its slice that is
    not yet recovered when its layer is processed.
    """
    if not r > 0:
        raise DomainError(f"radius must be positive, got {r!r}")
    if not M > 0:
        raise DomainError(f"norm bound must be positive, got {M!r}")
    if d < 2:
        raise DomainError("dimension must be at least 2")
    bound = ball_bound(r)
    k = math.isqrt(bound)
    entries = []
    for tail in itertools.product(range(-k, k + 1), repeat=d - 2):
        tail_norm = sum(c * c for c in tail)
        if tail_norm > bound:
            continue
        layers = slice_layers(bound - tail_norm)
        pending = set(itertools.chain.from_iterable(layers))
        for index, layer in enumerate(layers, start=1):
            for z in layer:
                x = _far_vertex(z)
                eps, y, direction = _choose_ray(z, x, sorted(pending - {z}), M)
                full_z = z + tail
                ray = Ray(y + tail, direction + (0,) * (d - 2))
                chords = tuple(c for c in cell_chords(ray, r) if in_ball(c.cell, bound))
                entries.append(PlanEntry(full_z, index, x + tail, y + tail, eps, ray, chords))
            pending.difference_update(layer)
    return StarPlan(r, M, d, entries)
