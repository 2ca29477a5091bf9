"""Exact, non-overdetermined inversions of the forward transforms."""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np

from .errors import DomainError, SingularError
from .fields import ADDITIVE, MULTIPLICATIVE, LatticeField, Sinogram
from .geometry import (
    Ray,
    ball_bound,
    ball_lattice_points,
    irrational_direction_for,
    planar_norm2,
    ray_lattice_points,
    tangent_ray,
)
from .matrix_core import mat_exp, mat_inv, mat_log, ordered_product
from .plan import StarPlan
from .transforms import star_transform

__all__ = [
    "MeasurementProvider",
    "AnnulusSpec",
    "reconstruct_irrational",
    "reconstruct_layers_discrete",
    "reconstruct_star",
    "branch_counterexample",
    "BranchCounterexample",
]


class MeasurementProvider:
    """Answers ``ray -> matrix`` queries and logs every ray it was asked for.

    Build one from a :class:`Sinogram` (exact lookup) or from a forward
    transform over a hidden field (synthetic data).
    """

    def __init__(self, lookup: Callable, d: int, n: int, r):
        self._lookup = lookup
        self.d = d
        self.n = n
        self.r = r
        self.consumed: list = []

    @classmethod
    def from_sinogram(cls, sino: Sinogram) -> "MeasurementProvider":
        m = sino.meta
        return cls(sino.__getitem__, int(m["d"]), int(m["n"]), m["r"])

    @classmethod
    def synthetic(cls, transform: Callable, hidden) -> "MeasurementProvider":
        return cls(lambda ray: transform(hidden, ray), hidden.d, hidden.n, hidden.r)

    def __call__(self, ray: Ray) -> np.ndarray:
        value = self._lookup(ray)
        self.consumed.append(ray)
        return np.asarray(value, dtype=np.complex128)

    @property
    def count(self) -> int:
        return len(self.consumed)


@dataclass(frozen=True)
class AnnulusSpec:
    """Planar-norm window ``alpha <= sqrt(z1^2 + z2^2) <= beta``."""

    alpha: float
    beta: float

    def __post_init__(self):
        if not 0 <= self.alpha <= self.beta:
            raise DomainError(f"annulus needs 0 <= alpha <= beta, got {self.alpha}, {self.beta}")

    def contains(self, z) -> bool:
        a = Fraction(self.alpha)
        b = Fraction(self.beta)
        return a * a <= planar_norm2(z) <= b * b


def reconstruct_irrational(data: MeasurementProvider, r, d: int | None = None) -> LatticeField:
    """Read each value off the long-step ray through its point."""
    d = data.d if d is None else d
    values = {x: data(irrational_direction_for(x, r)) for x in ball_lattice_points(r, d)}
    return LatticeField(d, data.n, r, MULTIPLICATIVE, values)


def _safe_inv(m, where: str):
    try:
        return mat_inv(m)
    except SingularError as exc:
        raise SingularError(f"{exc} while peeling {where}") from None


def _slices(r, d):
    """Ball points grouped by their trailing coordinates ``(z3, ..., zd)``."""
    groups: dict = {}
    for z in ball_lattice_points(r, d):
        groups.setdefault(z[2:], []).append(z)
    return groups


def reconstruct_layers_discrete(data: MeasurementProvider, r, annulus: AnnulusSpec | None = None,
                                d: int | None = None) -> LatticeField:
    """Peel the field shell by shell using the tangent rays of its points.

    Within each planar slice, points are processed by decreasing planar
    norm. For a point ``z`` the tangent ray meets only ``z`` and points of
    outer shells, so ``F(z) = L^-1 S(gamma_z) R^-1`` with ``L`` (``R``) the
    ordered product over the known points after (before) ``z``. With an
    annulus only points whose planar norm lies in it are recovered; this
    requires ``beta >= r``.
    """
    d = data.d if d is None else d
    n = data.n
    if annulus is not None and Fraction(annulus.beta) ** 2 < ball_bound(r):
        raise DomainError("annulus mode needs beta >= r")
    known: dict = {}
    for tail, pts in sorted(_slices(r, d).items()):
        shells: dict = {}
        for z in pts:
            shells.setdefault(planar_norm2(z), []).append(z)
        for norm2 in sorted(shells, reverse=True):
            if annulus is not None and Fraction(annulus.alpha) ** 2 > norm2:
                # shells are visited outermost first, so every later one is inside alpha
                break
            for z in shells[norm2]:
                ray = tangent_ray(z, d)
                line = ray_lattice_points(ray, r)
                pos = line.index(z)
                for y in line[:pos] + line[pos + 1:]:
                    if y not in known:
                        raise DomainError(f"point {y} on the ray of {z} is not yet recovered")
                right = ordered_product([known[y] for y in line[:pos]], n)
                left = ordered_product([known[y] for y in line[pos + 1:]], n)
                value = _safe_inv(left, f"{z}") @ data(ray) @ _safe_inv(right, f"{z}")
                known[z] = value
    return LatticeField(d, n, r, MULTIPLICATIVE, known)


def _real_log(m, z):
    v = complex(m[0, 0])
    if abs(v.imag) > 1e-12 * max(1.0, abs(v)) or v.real <= 0:
        raise DomainError(f"value {v} at cell {z} has no real logarithm")
    return np.array([[math.log(v.real)]], dtype=np.complex128)


def reconstruct_star(data: MeasurementProvider, plan: StarPlan, *, n: int | None = None,
                     real_scalar: bool = False) -> LatticeField:
    """Layer-stripping recovery of a piecewise-constant field from its
    star transform on the plan's rays.

    Chord lengths come from the plan. For each entry the factors of already
    recovered cells are peeled off both sides and the principal logarithm
    divided by the own chord length gives the cell value. With
    ``real_scalar=True`` (n = 1, real field) the real logarithm is used and
    the norm bound plays no role.
    """
    n = data.n if n is None else n
    if real_scalar and n != 1:
        raise DomainError("real_scalar recovery needs n = 1")
    bound = ball_bound(plan.r)
    known: dict = {}
    for entry in plan.entries:
        z = entry.z
        value = data(entry.ray)
        pos = None
        for i, chord in enumerate(entry.chords):
            if chord.cell == z:
                pos = i
                continue
            if chord.cell not in known and sum(c * c for c in chord.cell) <= bound:
                raise DomainError(f"plan ray for {z} crosses unrecovered cell {chord.cell}")
        if pos is None:
            raise DomainError(f"plan ray for {z} does not cross its own cell")

        def factors(chords):
            return [mat_exp(c.length * known[c.cell]) for c in chords if c.cell in known]

        right = ordered_product(factors(entry.chords[:pos]), n)
        left = ordered_product(factors(entry.chords[pos + 1:]), n)
        core = _safe_inv(left, f"cell {z}") @ value @ _safe_inv(right, f"cell {z}")
        length = entry.chords[pos].length
        if real_scalar:
            known[z] = _real_log(core, z) / length
        else:
            try:
                known[z] = mat_log(core) / length
            except DomainError as exc:
                raise DomainError(f"cell {z}, layer {entry.layer}: {exc}") from None
    return LatticeField(plan.d, n, plan.r, ADDITIVE, known)


@dataclass
class BranchCounterexample:
    f1: LatticeField
    f2: LatticeField
    s1: np.ndarray
    s2: np.ndarray
    length: float
    ray: Ray = field(repr=False)


def branch_counterexample(k: int, plan: StarPlan) -> BranchCounterexample:
    """Two scalar fields on the single-cell ball with equal star transform.

    ``f1 = 1`` and ``f2 = 1 + 2 pi i k / L`` where ``L`` is the plan's chord
    through the origin cell; their transforms agree because ``exp`` is
    ``2 pi i``-periodic, yet ``|f2|`` breaks the chord-length bound.
    """
    if k == 0:
        raise DomainError("k must be nonzero")
    if plan.d != 2 or len(plan.entries) != 1 or plan.entries[0].z != (0, 0):
        raise DomainError("counterexample needs a planar plan holding only the origin cell")
    entry = plan.entries[0]
    length = entry.own_length
    f1 = LatticeField(2, 1, plan.r, ADDITIVE, {(0, 0): [[1.0]]})
    f2 = LatticeField(2, 1, plan.r, ADDITIVE, {(0, 0): [[1.0 + 2j * cmath.pi * k / length]]})
    return BranchCounterexample(
        f1, f2, star_transform(f1, entry.ray), star_transform(f2, entry.ray), length, entry.ray
    )
