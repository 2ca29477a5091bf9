"""Exact geometry of rational lines against the integer lattice.

A :class:`Ray` is an oriented line ``base + t * dir`` with a rational base
point and a primitive integer direction. All incidence tests below run in
exact rational arithmetic (:class:`fractions.Fraction`); floats only appear
in returned chord lengths.

Unit cells are the half-open boxes ``[-1/2, 1/2)^d + z``.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

from .errors import DomainError

__all__ = [
    "Ray",
    "CellChord",
    "ball_bound",
    "in_ball",
    "primitive_direction",
    "ball_lattice_points",
    "ray_lattice_points",
    "tangent_ray",
    "norm_layers",
    "cell_chords",
    "line_meets_box",
    "box_interval",
    "shadow_set",
    "irrational_direction_for",
    "irrational_family",
    "tangent_family",
    "planar_norm2",
    "parse_rational",
    "format_rational",
]

HALF = Fraction(1, 2)


def parse_rational(s) -> Fraction:
    if isinstance(s, (int, Fraction)):
        return Fraction(s)
    try:
        return Fraction(str(s))
    except (ValueError, ZeroDivisionError) as exc:
        raise DomainError(f"bad rational {s!r}: {exc}") from None


def format_rational(q: Fraction) -> str:
    q = Fraction(q)
    return f"{q.numerator}/{q.denominator}"


def ball_bound(r) -> int:
    """Integer bound ``R2`` with ``|z| <= r  <=>  |z|^2 <= R2`` on the lattice.

    Float radii whose square lies within 1e-9 of an integer are snapped, so
    ``r = math.sqrt(2)`` means exactly radius sqrt(2).
    """
    if isinstance(r, (int, Fraction)):
        r2 = Fraction(r) ** 2
    else:
        rf = float(r)
        if not math.isfinite(rf):
            raise DomainError(f"radius must be finite, got {r!r}")
        r2 = Fraction(rf) ** 2
        nearest = round(r2)
        if abs(r2 - nearest) < Fraction(1, 10**9):
            r2 = Fraction(nearest)
    if r <= 0:
        raise DomainError(f"radius must be positive, got {r!r}")
    return math.floor(r2)


def in_ball(z: Sequence[int], bound: int) -> bool:
    return sum(c * c for c in z) <= bound


@dataclass(frozen=True)
class Ray:
    """Oriented line ``base + t * dir``; ``dir`` is a primitive integer vector."""

    base: tuple
    dir: tuple

    def __post_init__(self):
        base = tuple(parse_rational(b) for b in self.base)
        direction = tuple(int(c) for c in self.dir)
        if len(base) != len(direction):
            raise DomainError("base and dir dimensions differ")
        if len(base) < 2:
            raise DomainError("dimension must be at least 2")
        if not any(direction):
            raise DomainError("ray direction must be nonzero")
        if math.gcd(*direction) != 1:
            raise DomainError(f"ray direction {direction} is not primitive")
        object.__setattr__(self, "base", base)
        object.__setattr__(self, "dir", direction)

    @property
    def d(self) -> int:
        return len(self.dir)

    @property
    def dir_norm(self) -> float:
        return math.sqrt(sum(c * c for c in self.dir))

    @property
    def unit_dir(self) -> tuple:
        s = self.dir_norm
        return tuple(c / s for c in self.dir)

    def point(self, t) -> tuple:
        t = Fraction(t)
        return tuple(b + t * c for b, c in zip(self.base, self.dir))

    def reversed(self) -> "Ray":
        return Ray(self.base, tuple(-c for c in self.dir))

    @property
    def key(self) -> tuple:
        return (self.base, self.dir)

    def __str__(self):
        base = ",".join(format_rational(b) for b in self.base)
        direction = ",".join(str(c) for c in self.dir)
        return f"Ray(base=({base}), dir=({direction}))"


@dataclass(frozen=True)
class CellChord:
    cell: tuple
    length: float
    t_enter: Fraction
    t_exit: Fraction


def primitive_direction(z: Sequence[int]) -> tuple:
    z = tuple(int(c) for c in z)
    if not any(z):
        raise DomainError("zero vector has no direction")
    g = math.gcd(*z)
    return tuple(c // g for c in z)


@lru_cache(maxsize=256)
def _ball_points_cached(bound: int, d: int) -> tuple:
    k = math.isqrt(max(bound, 0))
    pts = [
        p
        for p in itertools.product(range(-k, k + 1), repeat=d)
        if sum(c * c for c in p) <= bound
    ]
    return tuple(sorted(pts))


def ball_lattice_points(r, d: int) -> list:
    """All integer points of the closed ball of radius ``r``, sorted."""
    if d < 2:
        raise DomainError("dimension must be at least 2")
    return list(_ball_points_cached(ball_bound(r), d))


def _first_lattice_parameter(ray: Ray):
    """Some ``t`` with ``ray.point(t)`` integral, or None if there is none."""
    for b, c in zip(ray.base, ray.dir):
        if c == 0 and b.denominator != 1:
            return None
    j = min((i for i, c in enumerate(ray.dir) if c), key=lambda i: abs(ray.dir[i]))
    bj, cj = ray.base[j], ray.dir[j]
    m0 = math.floor(bj)
    for m in range(m0, m0 + abs(cj)):
        t = (m - bj) / cj
        if all((b + t * c).denominator == 1 for b, c in zip(ray.base, ray.dir)):
            return t
    return None


@lru_cache(maxsize=65536)
def _ray_points_cached(ray: Ray, bound: int) -> tuple:
    t0 = _first_lattice_parameter(ray)
    if t0 is None:
        return ()
    p = tuple(int(x) for x in ray.point(t0))
    # |p + k dir|^2 <= bound is a quadratic inequality in the integer k.
    a = sum(c * c for c in ray.dir)
    b = sum(x * c for x, c in zip(p, ray.dir))
    c0 = sum(x * x for x in p) - bound
    disc = b * b - a * c0
    if disc < 0:
        return ()
    root = math.isqrt(disc)
    lo = (-b - root - 1) // a - 1
    hi = (-b + root) // a + 2
    pts = []
    for k in range(lo, hi + 1):
        q = tuple(x + k * c for x, c in zip(p, ray.dir))
        if sum(x * x for x in q) <= bound:
            pts.append(q)
    return tuple(pts)


def ray_lattice_points(ray: Ray, r) -> list:
    """Lattice points of the ray inside the closed ball, by increasing parameter."""
    return list(_ray_points_cached(ray, ball_bound(r)))


def tangent_ray(z: Sequence[int], d: int | None = None) -> Ray:
    """Ray through ``z`` perpendicular to its planar part ``(z1, z2)``.

    The direction is primitive and proportional to ``(-z2, z1, 0, ...)``;
    points on the ``z1 = z2 = 0`` axis get the fixed direction ``e_1``.
    """
    z = tuple(int(c) for c in z)
    d = len(z) if d is None else d
    if len(z) != d:
        raise DomainError("point dimension does not match d")
    if z[0] == 0 and z[1] == 0:
        direction = (1,) + (0,) * (d - 1)
    else:
        direction = primitive_direction((-z[1], z[0]) + (0,) * (d - 2))
    return Ray(z, direction)


def norm_layers(r, d: int = 2) -> list:
    """Split the planar ball's lattice points into shells of equal norm,
    outermost first."""
    if d != 2:
        raise DomainError("norm layers are planar; apply them per slice for d >= 3")
    groups: dict = {}
    for p in ball_lattice_points(r, 2):
        groups.setdefault(p[0] ** 2 + p[1] ** 2, set()).add(p)
    return [groups[k] for k in sorted(groups, reverse=True)]


def box_interval(ray: Ray, lower: Sequence[Fraction], upper: Sequence[Fraction]):
    """Exact parameter interval of the ray inside the closed box, or None."""
    t_lo = None
    t_hi = None
    for b, c, lo, hi in zip(ray.base, ray.dir, lower, upper):
        if c == 0:
            if b < lo or b > hi:
                return None
            continue
        a1 = (lo - b) / c
        a2 = (hi - b) / c
        if a1 > a2:
            a1, a2 = a2, a1
        t_lo = a1 if t_lo is None or a1 > t_lo else t_lo
        t_hi = a2 if t_hi is None or a2 < t_hi else t_hi
    if t_lo > t_hi:
        return None
    return t_lo, t_hi


def line_meets_box(ray: Ray, lower, upper) -> bool:
    return box_interval(ray, lower, upper) is not None


def cell_box(cell: Sequence[int]):
    return (
        tuple(Fraction(c) - HALF for c in cell),
        tuple(Fraction(c) + HALF for c in cell),
    )


@lru_cache(maxsize=65536)
def _chords_cached(ray: Ray, outer: float) -> tuple:
    d = ray.d
    k = math.floor(outer) + 1
    lower = (Fraction(-k) - HALF,) * d
    upper = (Fraction(k) + HALF,) * d
    span = box_interval(ray, lower, upper)
    if span is None or span[0] == span[1]:
        return ()
    t0, t1 = span
    cuts = {t0, t1}
    for b, c in zip(ray.base, ray.dir):
        if c == 0:
            continue
        for m in range(-k - 1, k + 1):
            t = (Fraction(m) + HALF - b) / c
            if t0 < t < t1:
                cuts.add(t)
    cuts = sorted(cuts)
    norm = ray.dir_norm
    outer2 = outer * outer
    chords = []
    for ta, tb in zip(cuts, cuts[1:]):
        mid = (ta + tb) / 2
        cell = tuple(math.floor(b + mid * c + HALF) for b, c in zip(ray.base, ray.dir))
        if sum(x * x for x in cell) > outer2:
            continue
        chords.append(CellChord(cell, float(tb - ta) * norm, ta, tb))
    return tuple(chords)


def cell_chords(ray: Ray, r) -> list:
    """Positive-length pieces of the ray inside unit cells near the ball.

    Covers every cell with center in the ball of radius ``r + sqrt(d)``,
    ordered by entry parameter. A face shared by two cells belongs to the
    cell on its larger-coordinate side; point and edge contacts are dropped.
    """
    return list(_chords_cached(ray, float(r) + math.sqrt(ray.d)))


def shadow_set(r, theta: Sequence[int], d: int | None = None) -> set:
    """Ball lattice points whose forward ray along ``theta`` leaves the ball's
    lattice points immediately."""
    step = primitive_direction(theta)
    d = len(step) if d is None else d
    bound = ball_bound(r)
    # by convexity z + k*step in the ball for some k >= 1 forces k = 1 in it
    return {
        z
        for z in _ball_points_cached(bound, d)
        if not in_ball(tuple(a + b for a, b in zip(z, step)), bound)
    }


def irrational_direction_for(x: Sequence[int], r) -> Ray:
    """A ray through ``x`` whose primitive step is longer than the ball's
    diameter, so it meets no other lattice point of the ball."""
    x = tuple(int(c) for c in x)
    bound = ball_bound(r)
    if not in_ball(x, bound):
        raise DomainError(f"point {x} lies outside the ball of radius {r}")
    m = math.floor(2 * float(r)) + 1
    # |(m, 1)| > 2r must hold exactly, not just in floats
    while m * m + 1 <= 4 * Fraction(float(r)) ** 2:
        m += 1
    return Ray(x, (m, 1) + (0,) * (len(x) - 2))



def irrational_family(r, d: int) -> list:
    """One long-step ray per ball point; the family has exactly N_r rays."""
    return [irrational_direction_for(x, r) for x in ball_lattice_points(r, d)]


def planar_norm2(z: Sequence[int]) -> int:
    return z[0] * z[0] + z[1] * z[1]


def tangent_family(r, d: int, annulus=None) -> list:
    """Tangent rays of the ball points, optionally only those whose planar
    norm lies in ``[alpha, beta]``."""
    pts = ball_lattice_points(r, d)
    if annulus is not None:
        alpha, beta = (Fraction(float(a)) if isinstance(a, float) else Fraction(a) for a in annulus)
        pts = [z for z in pts if alpha * alpha <= planar_norm2(z) <= beta * beta]
    return [tangent_ray(z, d) for z in pts]
