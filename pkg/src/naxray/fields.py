"""Matrix-valued lattice fields, delta-ball specs, sinograms and phantoms."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import DomainError, MissingRay
from .geometry import (
    Ray,
    ball_bound,
    ball_lattice_points,
    format_rational,
    in_ball,
    parse_rational,
)
from .jsonio import FORMAT_TAG
from .matrix_core import as_mat, frobenius_norm, identity, mat_from_json, mat_to_json

MULTIPLICATIVE = "multiplicative"
ADDITIVE = "additive"
REGIMES = (MULTIPLICATIVE, ADDITIVE)
TRANSFORM_KINDS = ("S_dis", "S_star", "S_con_delta")

__all__ = [
    "MULTIPLICATIVE",
    "ADDITIVE",
    "LatticeField",
    "DeltaFieldSpec",
    "Sinogram",
    "random_multiplicative_field",
    "random_additive_field",
    "complex_gaussian",
]


def _point(z, d=None) -> tuple:
    p = tuple(int(c) for c in z)
    if d is not None and len(p) != d:
        raise DomainError(f"point {p} does not have dimension {d}")
    return p


@dataclass(eq=False)
class LatticeField:
    """Finitely supported map from lattice points to n x n matrices.

    In the multiplicative regime unstored points read as the identity and
    stored values must be invertible; in the additive regime unstored points
    read as zero. Stored points must lie in the closed ball of radius ``r``.
    Values equal to the default are dropped on construction.
    """

    d: int
    n: int
    r: float
    regime: str
    values: dict = field(default_factory=dict)
    M: float | None = None

    def __post_init__(self):
        if self.d < 2:
            raise DomainError(f"dimension must be at least 2, got {self.d}")
        if self.n < 1:
            raise DomainError(f"matrix order must be positive, got {self.n}")
        if self.regime not in REGIMES:
            raise DomainError(f"unknown regime {self.regime!r}")
        bound = ball_bound(self.r)
        default = self.default()
        clean = {}
        for z, m in self.values.items():
            p = _point(z, self.d)
            m = as_mat(m)
            if m.shape != (self.n, self.n):
                raise DomainError(f"value at {p} has shape {m.shape}, expected {(self.n, self.n)}")
            if not in_ball(p, bound):
                raise DomainError(f"point {p} lies outside the ball of radius {self.r}")
            if self.regime == MULTIPLICATIVE and np.linalg.det(m) == 0:
                raise DomainError(f"value at {p} is singular")
            if self.regime == ADDITIVE and self.M is not None:
                if frobenius_norm(m) > self.M * (1 + 1e-12):
                    raise DomainError(f"value at {p} exceeds the norm bound {self.M}")
            if np.array_equal(m, default):
                continue
            clean[p] = m
        self.values = clean

    def default(self) -> np.ndarray:
        if self.regime == MULTIPLICATIVE:
            return identity(self.n)
        return np.zeros((self.n, self.n), dtype=np.complex128)

    def __getitem__(self, z) -> np.ndarray:
        v = self.values.get(tuple(z))
        return self.default() if v is None else v

    def __contains__(self, z) -> bool:
        return tuple(z) in self.values

    @property
    def support(self) -> list:
        return sorted(self.values)

    def restricted(self, points) -> "LatticeField":
        keep = {tuple(p) for p in points}
        return LatticeField(
            self.d, self.n, self.r, self.regime,
            {z: m for z, m in self.values.items() if z in keep}, self.M,
        )

    def max_residual(self, other: "LatticeField", points=None) -> float:
        if points is None:
            points = set(self.values) | set(other.values)
        return max((frobenius_norm(self[z] - other[z]) for z in points), default=0.0)

    def to_json(self) -> dict:
        doc = {
            "format": FORMAT_TAG,
            "d": self.d,
            "n": self.n,
            "r": float(self.r),
            "regime": self.regime,
            "entries": [{"z": list(z), "m": mat_to_json(self.values[z])} for z in self.support],
        }
        if self.M is not None:
            doc["M"] = float(self.M)
        return doc

    @classmethod
    def from_json(cls, doc: dict) -> "LatticeField":
        _check_format(doc, "field")
        try:
            values = {tuple(e["z"]): mat_from_json(e["m"]) for e in doc["entries"]}
            return cls(int(doc["d"]), int(doc["n"]), float(doc["r"]), doc["regime"],
                       values, doc.get("M"))
        except (KeyError, TypeError) as exc:
            raise DomainError(f"malformed field document: missing or bad {exc}") from None


@dataclass(eq=False)
class DeltaFieldSpec:
    """Additive field smeared over small disjoint balls around its support.

    ``w[z]`` is the weight and ``rho[z]`` the ball radius at support point z.
    """

    base: LatticeField
    w: dict
    rho: dict

    def __post_init__(self):
        if self.base.regime != ADDITIVE:
            raise DomainError("delta fields need an additive base field")
        self.w = {_point(z): float(v) for z, v in self.w.items()}
        self.rho = {_point(z): float(v) for z, v in self.rho.items()}
        for z in self.base.support:
            if z not in self.w or z not in self.rho:
                raise DomainError(f"support point {z} lacks a weight or radius")
        for z in self.base.support:
            if not (self.w[z] > 0 and self.rho[z] > 0):
                raise DomainError(f"weight and radius at {z} must be positive")
        pts = self.base.support
        for a, b in itertools.combinations(pts, 2):
            gap2 = sum((x - y) ** 2 for x, y in zip(a, b))
            reach = Fraction(self.rho[a]) + Fraction(self.rho[b])
            if gap2 <= reach * reach:
                raise DomainError(f"balls around {a} and {b} overlap")

    def evaluate(self, x) -> np.ndarray:
        """Value of the continuous field at a real point ``x``."""
        n = self.base.n
        reach = max(self.rho.values(), default=0.0)
        if reach < 0.5:
            # only the nearest lattice point can own x
            z = tuple(math.floor(c + 0.5) for c in x)
            v = self.base.values.get(z)
            if v is not None and sum((c - b) ** 2 for c, b in zip(x, z)) <= self.rho[z] ** 2:
                return self.w[z] * v
            return np.zeros((n, n), dtype=np.complex128)
        ranges = [range(math.floor(c - reach), math.ceil(c + reach) + 1) for c in x]
        for z in itertools.product(*ranges):
            v = self.base.values.get(z)
            if v is None:
                continue
            dist2 = sum((c - b) ** 2 for c, b in zip(x, z))
            if dist2 <= self.rho[z] ** 2:
                return self.w[z] * v
        return np.zeros((n, n), dtype=np.complex128)


class Sinogram:
    """Measured (ray, matrix) pairs plus provenance metadata."""

    def __init__(self, rays, meta: dict):
        self.meta = dict(meta)
        for key in ("d", "n", "r", "transform_kind"):
            if key not in self.meta:
                raise DomainError(f"sinogram meta lacks {key!r}")
        if self.meta["transform_kind"] not in TRANSFORM_KINDS:
            raise DomainError(f"unknown transform kind {self.meta['transform_kind']!r}")
        n = int(self.meta["n"])
        self.rays = []
        self._lookup = {}
        for ray, value in rays:
            value = as_mat(value)
            if value.shape != (n, n):
                raise DomainError(f"value for {ray} has shape {value.shape}, expected {(n, n)}")
            if ray.key in self._lookup:
                raise DomainError(f"duplicate ray {ray}")
            self._lookup[ray.key] = value
            self.rays.append((ray, value))

    def __len__(self) -> int:
        return len(self.rays)

    def __contains__(self, ray: Ray) -> bool:
        return ray.key in self._lookup

    def __getitem__(self, ray: Ray) -> np.ndarray:
        try:
            return self._lookup[ray.key]
        except KeyError:
            raise MissingRay(ray) from None

    def to_json(self) -> dict:
        return {
            "format": FORMAT_TAG,
            "meta": dict(self.meta),
            "rays": [
                {
                    "base": [format_rational(b) for b in ray.base],
                    "dir": list(ray.dir),
                    "value": mat_to_json(value),
                }
                for ray, value in self.rays
            ],
        }

    @classmethod
    def from_json(cls, doc: dict) -> "Sinogram":
        _check_format(doc, "sinogram")
        try:
            rays = [
                (Ray(tuple(parse_rational(b) for b in e["base"]), tuple(e["dir"])),
                 mat_from_json(e["value"]))
                for e in doc["rays"]
            ]
            return cls(rays, doc["meta"])
        except (KeyError, TypeError) as exc:
            raise DomainError(f"malformed sinogram document: missing or bad {exc}") from None


def _check_format(doc, what):
    if not isinstance(doc, dict) or doc.get("format") != FORMAT_TAG:
        raise DomainError(f"{what} document is not tagged {FORMAT_TAG!r}")


def complex_gaussian(rng: np.random.Generator, n: int) -> np.ndarray:
    return (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / math.sqrt(2)


def random_multiplicative_field(d: int, n: int, r, seed: int, scale: float = 0.3) -> LatticeField:
    """Phantom with values ``I + scale * G`` on every ball point, |det| >= 0.1."""
    rng = np.random.default_rng(seed)
    values = {}
    for z in ball_lattice_points(r, d):
        while True:
            m = identity(n) + scale * complex_gaussian(rng, n)
            if abs(np.linalg.det(m)) >= 0.1:
                break
        values[z] = m
    return LatticeField(d, n, r, MULTIPLICATIVE, values)


def random_additive_field(d: int, n: int, r, seed: int, M: float = 1.0,
                          scale: float | None = 0.5) -> LatticeField:
    """Phantom with values of norm ``scale * M``; ``scale=None`` draws the
    norm fraction uniformly from (0, 1] per point."""
    rng = np.random.default_rng(seed)
    values = {}
    for z in ball_lattice_points(r, d):
        g = complex_gaussian(rng, n)
        frac = scale if scale is not None else 1.0 - rng.random()
        values[z] = frac * M * g / frobenius_norm(g)
    return LatticeField(d, n, r, ADDITIVE, values, M)
