"""Small dense complex matrix helpers.

Matrices are plain ``numpy`` arrays of dtype ``complex128`` and shape
``(n, n)``. Every function here is pure and returns a fresh array.
"""
from __future__ import annotations

import math

import numpy as np

from .errors import DomainError, SingularError

__all__ = [
    "as_mat",
    "identity",
    "frobenius_norm",
    "mat_exp",
    "mat_log",
    "mat_inv",
    "ordered_product",
    "mat_to_json",
    "mat_from_json",
]

_EXP_SCALE_TARGET = 0.5
_EXP_TERM_CUTOFF = 1e-17
_LOG_TERM_CUTOFF = 1e-15
_LOG_TAIL_CUTOFF = 1e-16
_LOG_MAX_TERMS = 1_000_000
_PIVOT_FLOOR = 1e-300


def as_mat(a) -> np.ndarray:
    """Coerce ``a`` to a finite square complex matrix (copies)."""
    m = np.array(a, dtype=np.complex128)
    if m.ndim == 0:
        m = m.reshape(1, 1)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] == 0:
        raise DomainError(f"expected a non-empty square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise DomainError("matrix has non-finite entries")
    return m


def identity(n: int) -> np.ndarray:
    return np.eye(n, dtype=np.complex128)


def frobenius_norm(a) -> float:
    """sqrt(Trace(a^H a))."""
    m = np.asarray(a, dtype=np.complex128)
    return math.sqrt(np.vdot(m, m).real)


def mat_exp(a) -> np.ndarray:
    """Matrix exponential by scaling and squaring with a Taylor core.

    The argument is scaled by ``2**-k`` until its Frobenius norm is at most
    0.5, the Taylor series is summed until a term drops below 1e-17, and the
    result is squared ``k`` times.
    """
    m = as_mat(a)
    n = m.shape[0]
    norm = frobenius_norm(m)
    if norm == 0.0:
        return identity(n)
    k = 0
    if norm > _EXP_SCALE_TARGET:
        k = max(0, math.ceil(math.log2(norm / _EXP_SCALE_TARGET)))
    scaled = m / (2.0**k)
    result = identity(n)
    term = identity(n)
    j = 1
    while True:
        term = term @ scaled / j
        result = result + term
        if frobenius_norm(term) < _EXP_TERM_CUTOFF:
            break
        j += 1
    for _ in range(k):
        result = result @ result
    return result


def mat_log(a) -> np.ndarray:
    """Principal logarithm through the series sum (-1)^(m+1) (a - I)^m / m.

    Summation stops once a term is below 1e-15 and a geometric bound on the
    remaining tail is below 1e-16.

    Only defined on the disk ``||a - I||_F < 1``; anything outside raises
    :class:`DomainError` instead of falling back to another method.
    """
    m = as_mat(a)
    n = m.shape[0]
    delta = m - identity(n)
    dnorm = frobenius_norm(delta)
    if dnorm >= 1.0:
        raise DomainError(
            f"log series needs ||a - I||_F < 1, got {dnorm:.6g}; "
            "shorten the chord or lower the norm bound"
        )
    result = np.zeros((n, n), dtype=np.complex128)
    if dnorm == 0.0:
        return result
    power = identity(n)
    for k in range(1, _LOG_MAX_TERMS + 1):
        power = power @ delta
        term = power / k
        if k % 2 == 0:
            result = result - term
        else:
            result = result + term
        # the tail after term k is at most ||delta^k|| q / ((k + 1)(1 - q))
        pnorm = frobenius_norm(power)
        if pnorm / k < _LOG_TERM_CUTOFF and pnorm * dnorm / ((k + 1) * (1 - dnorm)) < _LOG_TAIL_CUTOFF:
            return result
    raise DomainError(f"log series did not converge in {_LOG_MAX_TERMS} terms")


def mat_inv(a) -> np.ndarray:
    """Inverse by Gauss-Jordan elimination with partial pivoting."""
    m = as_mat(a)
    n = m.shape[0]
    aug = np.concatenate([m, identity(n)], axis=1)
    for col in range(n):
        pivot_row = col + int(np.argmax(np.abs(aug[col:, col])))
        pivot = aug[pivot_row, col]
        if abs(pivot) < _PIVOT_FLOOR:
            raise SingularError(f"pivot {abs(pivot):.3g} in column {col} below {_PIVOT_FLOOR:g}")
        if pivot_row != col:
            aug[[col, pivot_row]] = aug[[pivot_row, col]]
        aug[col] = aug[col] / pivot
        factors = aug[:, col].copy()
        factors[col] = 0.0
        aug -= np.outer(factors, aug[col])
    return aug[:, n:].copy()


def ordered_product(factors, n: int) -> np.ndarray:
    """Fold ``factors`` (earliest first) so the last one ends up leftmost."""
    result = identity(n)
    for f in factors:
        result = f @ result
    return result


def mat_to_json(a) -> list:
    m = np.asarray(a, dtype=np.complex128)
    return [[[float(x.real), float(x.imag)] for x in row] for row in m]


def mat_from_json(obj) -> np.ndarray:
    try:
        rows = [[complex(float(re), float(im)) for re, im in row] for row in obj]
    except (TypeError, ValueError) as exc:
        raise DomainError(f"malformed matrix: {exc}") from None
    return as_mat(rows)
