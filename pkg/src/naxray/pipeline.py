"""End-to-end workflows shared by the command line and the test-suite.

Each function here is one CLI step expressed over library objects, so every
command-line round trip can be replayed without spawning a process.
"""
from __future__ import annotations

from fractions import Fraction

from .errors import DomainError, MissingRay
from .fields import ADDITIVE, MULTIPLICATIVE, LatticeField, Sinogram
from .geometry import ball_lattice_points, irrational_family, planar_norm2, tangent_family
from .jsonio import FORMAT_TAG
from .matrix_core import frobenius_norm, mat_to_json
from .plan import StarPlan
from .reconstruction import (
    AnnulusSpec,
    MeasurementProvider,
    branch_counterexample,
    reconstruct_irrational,
    reconstruct_layers_discrete,
    reconstruct_star,
)
from .transforms import discrete_xray, forward_project, star_transform

METHODS = ("irrational", "layers", "star")

__all__ = [
    "METHODS",
    "parse_annulus",
    "ray_family",
    "forward",
    "check_coverage",
    "validate_reconstruction",
    "reconstruct",
    "residual_report",
    "consistency_report",
    "counterexample_document",
]


def parse_annulus(text: str | None) -> AnnulusSpec | None:
    """``"a,b"`` -> :class:`AnnulusSpec`; None passes through."""
    if text is None:
        return None
    parts = text.split(",")
    if len(parts) != 2:
        raise DomainError(f"annulus must look like 'alpha,beta', got {text!r}")
    try:
        alpha, beta = (float(p) for p in parts)
    except ValueError:
        raise DomainError(f"annulus bounds must be numbers, got {text!r}") from None
    return AnnulusSpec(alpha, beta)


def _require_plan(plan, method):
    if method == "star" and plan is None:
        raise DomainError("method 'star' needs a plan")


def ray_family(method: str, r, d: int, *, annulus: AnnulusSpec | None = None,
               plan: StarPlan | None = None) -> list:
    """Rays a reconstruction method reads, in the order it reads them."""
    if method == "irrational":
        return irrational_family(r, d)
    if method == "layers":
        window = None if annulus is None else (annulus.alpha, annulus.beta)
        return tangent_family(r, d, window)
    if method == "star":
        _require_plan(plan, method)
        return [e.ray for e in plan.entries]
    raise DomainError(f"unknown method {method!r}; expected one of {METHODS}")


def forward(field: LatticeField, method: str, *, annulus: AnnulusSpec | None = None,
            plan: StarPlan | None = None, threads: int | None = None) -> Sinogram:
    """Measure ``field`` on the ray family of ``method``."""
    if method == "star":
        _require_plan(plan, method)
        if field.regime != ADDITIVE:
            raise DomainError("method 'star' measures additive fields")
        if plan.d != field.d or Fraction(plan.r) != Fraction(field.r):
            raise DomainError(
                f"plan is for d={plan.d}, r={plan.r} but field has d={field.d}, r={field.r}")
        rays = ray_family(method, field.r, field.d, plan=plan)
        return forward_project(star_transform, field, rays, "S_star",
                               threads=threads, plan_id=plan.digest())
    if field.regime != MULTIPLICATIVE:
        raise DomainError(f"method {method!r} measures multiplicative fields")
    rays = ray_family(method, field.r, field.d, annulus=annulus)
    return forward_project(discrete_xray, field, rays, "S_dis", threads=threads)


def check_coverage(sino: Sinogram, rays) -> None:
    """Raise :class:`MissingRay` naming the first ray the sinogram lacks."""
    for ray in rays:
        if ray not in sino:
            raise MissingRay(ray, f"{len(sino)} rays present")


def validate_reconstruction(sino: Sinogram, method: str, *, annulus: AnnulusSpec | None = None,
                            plan: StarPlan | None = None) -> None:
    """Check transform kind, plan identity and ray coverage without any arithmetic."""
    meta = sino.meta
    d, r = int(meta["d"]), meta["r"]
    expected_kind = "S_star" if method == "star" else "S_dis"
    if meta["transform_kind"] != expected_kind:
        raise DomainError(
            f"method {method!r} needs {expected_kind} data, sinogram holds {meta['transform_kind']}")
    if method == "star":
        _require_plan(plan, method)
        stamped = meta.get("plan_id")
        if stamped is not None and stamped != plan.digest():
            raise DomainError(f"sinogram was measured with plan {stamped}, not {plan.digest()}")
        if plan.d != d or Fraction(plan.r) != Fraction(r):
            raise DomainError(f"plan is for d={plan.d}, r={plan.r}; sinogram has d={d}, r={r}")
    if method == "layers" and annulus is not None and Fraction(annulus.beta) ** 2 < Fraction(r) ** 2:
        raise DomainError("annulus mode needs beta >= r")
    check_coverage(sino, ray_family(method, r, d, annulus=annulus, plan=plan))


def reconstruct(sino: Sinogram, method: str, *, annulus: AnnulusSpec | None = None,
                plan: StarPlan | None = None):
    """Validate ``sino`` for ``method`` and invert it.

    Returns ``(field, provider)``; the provider records the rays consumed.
    """
    validate_reconstruction(sino, method, annulus=annulus, plan=plan)
    d, r = int(sino.meta["d"]), sino.meta["r"]
    provider = MeasurementProvider.from_sinogram(sino)
    if method == "irrational":
        field = reconstruct_irrational(provider, r, d)
    elif method == "layers":
        field = reconstruct_layers_discrete(provider, r, annulus, d)
    else:
        field = reconstruct_star(provider, plan)
    return field, provider


def _points_in(field: LatticeField, annulus: AnnulusSpec | None) -> list:
    pts = ball_lattice_points(field.r, field.d)
    if annulus is None:
        return pts
    return [z for z in pts if Fraction(annulus.alpha) ** 2 <= planar_norm2(z)]


def residual_report(estimate: LatticeField, reference: LatticeField, *,
                    annulus: AnnulusSpec | None = None, extra: dict | None = None) -> dict:
    """Per-cell Frobenius residuals of ``estimate`` against ``reference``."""
    if (estimate.d, estimate.n) != (reference.d, reference.n):
        raise DomainError("fields differ in dimension or matrix order")
    if estimate.regime != reference.regime:
        raise DomainError(f"regimes differ: {estimate.regime} vs {reference.regime}")
    cells = []
    worst = 0.0
    for z in _points_in(reference, annulus):
        res = frobenius_norm(estimate[z] - reference[z])
        worst = max(worst, res)
        cells.append({"z": list(z), "residual": res})
    doc = {"format": FORMAT_TAG, "kind": "residuals", "cells": cells, "max_residual": worst}
    if extra:
        doc.update(extra)
    return doc


def consistency_report(field: LatticeField, sino: Sinogram) -> dict:
    """Replay the sinogram's transform on ``field`` and compare ray by ray."""
    kind = sino.meta["transform_kind"]
    if kind == "S_dis":
        transform = discrete_xray
    elif kind == "S_star":
        transform = star_transform
    else:
        raise DomainError(f"cannot replay {kind} data from a lattice field")
    rays = []
    worst = 0.0
    for ray, value in sino.rays:
        res = frobenius_norm(transform(field, ray) - value)
        worst = max(worst, res)
        rays.append({"ray": str(ray), "residual": res})
    return {"format": FORMAT_TAG, "kind": "consistency", "rays": rays, "max_residual": worst}


def counterexample_document(k: int, plan: StarPlan) -> dict:
    ce = branch_counterexample(k, plan)
    return {
        "format": FORMAT_TAG,
        "kind": "counterexample",
        "k": k,
        "chord_length": ce.length,
        "ray": str(ce.ray),
        "field_1": ce.f1.to_json(),
        "field_2": ce.f2.to_json(),
        "transform_1": mat_to_json(ce.s1),
        "transform_2": mat_to_json(ce.s2),
        "transform_gap": frobenius_norm(ce.s1 - ce.s2),
    }
