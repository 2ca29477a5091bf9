"""Forward transforms of lattice fields along rays.

Products are always assembled in ray order: factors met later along the ray
multiply on the left.
"""
from __future__ import annotations

import cmath
import math
import os
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from typing import Callable, Mapping

import numpy as np

from .errors import DomainError, OffCenterIncidence
from .fields import ADDITIVE, MULTIPLICATIVE, DeltaFieldSpec, LatticeField, Sinogram
from .geometry import (
    Ray,
    ball_bound,
    ball_lattice_points,
    cell_chords,
    in_ball,
    primitive_direction,
    ray_lattice_points,
)
from .matrix_core import as_mat, identity, mat_exp

__all__ = [
    "discrete_xray",
    "discrete_scalar_xray",
    "weighted_xray",
    "triangular_field",
    "induced_weight",
    "factorize_weight",
    "lift_delta_field",
    "continuous_xray_delta",
    "star_transform",
    "continuous_xray_numeric",
    "attenuation_cell_factors",
    "attenuation_cell_matrix",
    "forward_project",
]


def discrete_xray(field: LatticeField, ray: Ray) -> np.ndarray:
    """Ordered product of the field's values at the ray's lattice points."""
    if field.regime != MULTIPLICATIVE:
        raise DomainError("discrete_xray needs a multiplicative field")
    result = identity(field.n)
    for y in ray_lattice_points(ray, field.r):
        v = field.values.get(y)
        if v is not None:
            result = v @ result
    return result


def discrete_scalar_xray(f: LatticeField, ray: Ray) -> complex:
    """Sum of a scalar additive field over the ray's lattice points."""
    if f.n != 1 or f.regime != ADDITIVE:
        raise DomainError("discrete_scalar_xray needs a scalar additive field")
    total = 0j
    for y in ray_lattice_points(ray, f.r):
        v = f.values.get(y)
        if v is not None:
            total += complex(v[0, 0])
    return total


def _scalar(u, z, default):
    if isinstance(u, LatticeField):
        return complex(u[z][0, 0]) if z in u else default
    return complex(u.get(z, default))


def weighted_xray(weight: Callable, u, ray: Ray, r=None) -> complex:
    """Sum of ``weight(y, ray.dir) * u(y)`` over the ray's lattice points.

    ``u`` is a scalar additive field or a mapping point -> value (missing
    points are zero); ``r`` defaults to the field radius.
    """
    if r is None:
        r = u.r
    total = 0j
    for y in ray_lattice_points(ray, r):
        uy = _scalar(u, y, 0j)
        if uy != 0:
            total += complex(weight(y, ray.dir)) * uy
    return total


def _check_nonvanishing(values: Mapping, name: str) -> None:
    for z, v in values.items():
        if complex(v) == 0:
            raise DomainError(f"{name} vanishes at {tuple(z)}")


def triangular_field(w1: Mapping, w2: Mapping, u: Mapping, r, d: int | None = None) -> LatticeField:
    """2x2 field ``[[w1, w2*u], [0, 1]]``; missing w1, w2 read as 1 and u as 0."""
    _check_nonvanishing(w1, "w1")
    _check_nonvanishing(w2, "w2")
    pts = set(map(tuple, w1)) | set(map(tuple, w2)) | set(map(tuple, u))
    if d is None:
        d = len(next(iter(pts))) if pts else 2
    values = {}
    for z in pts:
        a = complex(w1.get(z, 1))
        b = complex(w2.get(z, 1)) * complex(u.get(z, 0))
        values[z] = np.array([[a, b], [0, 1]], dtype=np.complex128)
    return LatticeField(d, 2, r, MULTIPLICATIVE, values)


def induced_weight(w1: Mapping, w2: Mapping, theta, r) -> Callable:
    """Weight ``W(y, theta) = w2(y) * prod of w1 over ball points after y``.

    The returned callable only accepts the direction it was built for.
    """
    _check_nonvanishing(w1, "w1")
    _check_nonvanishing(w2, "w2")
    step = primitive_direction(theta)
    bound = ball_bound(r)

    def weight(y, direction=step):
        if primitive_direction(direction) != step:
            raise DomainError(f"weight was built for direction {step}, not {tuple(direction)}")
        y = tuple(y)
        value = complex(w2.get(y, 1))
        z = tuple(a + b for a, b in zip(y, step))
        while in_ball(z, bound):
            value *= complex(w1.get(z, 1))
            z = tuple(a + b for a, b in zip(z, step))
        return value

    return weight


def _lines_along(theta, r, d):
    """Ball lattice points grouped into lines of direction ``theta``, each
    ordered along ``theta``."""
    step = primitive_direction(theta)
    bound = ball_bound(r)
    lines = []
    for z in ball_lattice_points(r, d):
        prev = tuple(a - b for a, b in zip(z, step))
        if in_ball(prev, bound):
            continue
        line = [z]
        nxt = tuple(a + b for a, b in zip(z, step))
        while in_ball(nxt, bound):
            line.append(nxt)
            nxt = tuple(a + b for a, b in zip(nxt, step))
        lines.append(line)
    return lines


def factorize_weight(weight: Callable, theta, r, d: int = 2):
    """Split a nonvanishing weight into ``(w1, w2)`` with ``w2 = 1`` off the
    exit points, so that :func:`induced_weight` rebuilds it on the ball.

    Per line ``y_1, ..., y_n`` along ``theta``: ``w2(y_n) = W(y_n)``,
    ``w1(y_n) = W(y_{n-1})``, ``w1(y_k) = W(y_{k-1}) / W(y_k)`` for
    ``1 < k < n`` and ``w1(y_1) = 1``.
    """
    step = primitive_direction(theta)
    w1: dict = {}
    w2: dict = {}
    for line in _lines_along(step, r, d):
        vals = [complex(weight(y, step)) for y in line]
        for y, v in zip(line, vals):
            if v == 0:
                raise DomainError(f"weight vanishes at {y}")
        n = len(line)
        w2[line[-1]] = vals[-1]
        w1[line[0]] = 1 + 0j
        if n >= 2:
            w1[line[-1]] = vals[-2]
        for k in range(1, n - 1):
            w1[line[k]] = vals[k - 1] / vals[k]
        for k in range(n - 1):
            w2[line[k]] = 1 + 0j
    return w1, w2


def lift_delta_field(spec: DeltaFieldSpec) -> LatticeField:
    """Multiplicative field ``exp(2 rho w f)`` at each support point."""
    base = spec.base
    values = {
        z: mat_exp(2.0 * spec.rho[z] * spec.w[z] * base[z]) for z in base.support
    }
    return LatticeField(base.d, base.n, base.r, MULTIPLICATIVE, values)


def continuous_xray_delta(spec: DeltaFieldSpec, ray: Ray) -> np.ndarray:
    """Exact continuous transform of a delta-ball field along ``ray``.

    Every ball must either be missed or be crossed through its center;
    grazing an off-center ball raises :class:`OffCenterIncidence`.
    """
    base = spec.base
    p = ray.dir
    p2 = sum(c * c for c in p)
    hits = []
    for z in base.support:
        v = [Fraction(a) - b for a, b in zip(z, ray.base)]
        along = sum(x * c for x, c in zip(v, p))
        dist2 = sum(x * x for x in v) - along * along / p2
        if dist2 == 0:
            hits.append((along / p2, z))
            continue
        rho = Fraction(spec.rho[z])
        if dist2 <= rho * rho:
            raise OffCenterIncidence(
                f"{ray} meets the ball around {z} off-center "
                f"(distance^2 {float(dist2):.6g} <= rho^2 {float(rho * rho):.6g})"
            )
    result = identity(base.n)
    for _, z in sorted(hits):
        result = mat_exp(spec.w[z] * 2.0 * spec.rho[z] * base[z]) @ result
    return result


def star_transform(f: LatticeField, ray: Ray) -> np.ndarray:
    """Ordered product of ``exp(chord length * f(cell))`` over crossed cells."""
    if f.regime != ADDITIVE:
        raise DomainError("star_transform needs an additive field")
    result = identity(f.n)
    for chord in cell_chords(ray, f.r):
        v = f.values.get(chord.cell)
        if v is not None:
            result = mat_exp(chord.length * v) @ result
    return result


def continuous_xray_numeric(evaluator: Callable, ray: Ray, delta: float,
                            t_min: float, t_max: float) -> np.ndarray:
    """Left-point multiplicative integral with arc-length step ``delta``.

    Samples ``base + s * unit_dir`` at ``s = t_min + i * delta`` for every
    ``i`` with ``s < t_max`` and multiplies ``exp(f(x) * delta)`` leftwards.
    """
    if not delta > 0:
        raise DomainError("delta must be positive")
    base = [float(b) for b in ray.base]
    unit = ray.unit_dir
    steps = math.ceil((t_max - t_min) / delta - 1e-12)
    result = identity(as_mat(evaluator(tuple(base))).shape[0])
    for i in range(max(steps, 0)):
        s = t_min + i * delta
        v = np.asarray(evaluator(tuple(b + s * u for b, u in zip(base, unit))))
        if v.any():
            result = mat_exp(as_mat(v) * delta) @ result
    return result


def attenuation_cell_factors(a: complex, delta: float):
    """``(exp(-a delta), (exp(-a delta) - 1) / a)``, with limit ``(1, -delta)``
    at ``a = 0``."""
    a = complex(a)
    w1 = cmath.exp(-a * delta)
    if a == 0:
        return w1, complex(-delta)
    # truncated series avoids cancellation in exp(-a delta) - 1
    if abs(a * delta) < 1e-5:
        w2 = -delta * (1 - a * delta / 2 + (a * delta) ** 2 / 6)
    else:
        w2 = (w1 - 1) / a
    return w1, w2


def attenuation_cell_matrix(a: complex, u: complex, delta: float) -> np.ndarray:
    w1, w2 = attenuation_cell_factors(a, delta)
    return np.array([[w1, w2 * complex(u)], [0, 1]], dtype=np.complex128)


def _default_threads() -> int:
    env = os.environ.get("NAXRAY_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise DomainError(f"NAXRAY_THREADS must be an integer, got {env!r}") from None
    return os.cpu_count() or 1


def forward_project(transform: Callable, source, rays, kind: str, *,
                    threads: int | None = None, plan_id: str | None = None) -> Sinogram:
    """Evaluate ``transform(source, ray)`` on every ray into a :class:`Sinogram`."""
    rays = list(rays)
    threads = threads or _default_threads()
    if threads > 1 and len(rays) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            values = list(pool.map(lambda g: transform(source, g), rays))
    else:
        values = [transform(source, g) for g in rays]
    base = source.base if isinstance(source, DeltaFieldSpec) else source
    meta = {"d": base.d, "n": base.n, "r": float(base.r), "transform_kind": kind}
    if plan_id is not None:
        meta["plan_id"] = plan_id
    return Sinogram(zip(rays, values), meta)
