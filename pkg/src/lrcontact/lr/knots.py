"""Univariate local knot vectors: Cox-de Boor evaluation and knot insertion splits."""
from __future__ import annotations

from typing import Sequence

import numpy as np

KNOT_TOL = 1e-12


class KnotVectorError(ValueError):
    """Raised for malformed local knot vectors."""


class SplitError(ValueError):
    """Raised when a knot cannot be inserted into a local knot vector."""


def validate_knots(knots: Sequence[float], degree: int) -> tuple[float, ...]:
    """Check the local knot vector invariants and return it as a tuple."""
    kv = tuple(float(k) for k in knots)
    if degree < 0:
        raise KnotVectorError(f"negative degree {degree}")
    if len(kv) != degree + 2:
        raise KnotVectorError(f"expected {degree + 2} knots for degree {degree}, got {len(kv)}")
    if any(b < a for a, b in zip(kv, kv[1:])):
        raise KnotVectorError(f"knots not non-decreasing: {kv}")
    if not kv[0] < kv[-1]:
        raise KnotVectorError(f"zero-length support: {kv}")
    return kv


def multiplicity(knots: Sequence[float], value: float, tol: float = KNOT_TOL) -> int:
    return sum(1 for k in knots if abs(k - value) <= tol)


def _cox_de_boor(kv: np.ndarray, p: int, x: np.ndarray, closed_right: bool):
    """Degree-raising triangle for one function; returns values and derivatives."""
    # degree-0 indicators over the p+1 knot spans of the local vector
    n = np.empty((p + 1, x.size))
    for j in range(p + 1):
        lo, hi = kv[j], kv[j + 1]
        if closed_right and hi == kv[-1] and hi > lo:
            n[j] = (x >= lo) & (x <= hi)
        else:
            n[j] = (x >= lo) & (x < hi)
    dn = np.zeros(x.size)
    for k in range(1, p + 1):
        if k == p:
            d0 = kv[p] - kv[0]
            d1 = kv[p + 1] - kv[1]
            dn = (p / d0 * n[0] if d0 > 0 else 0.0) - (p / d1 * n[1] if d1 > 0 else 0.0)
        for j in range(p + 1 - k):
            left = kv[j + k] - kv[j]
            right = kv[j + k + 1] - kv[j + 1]
            term = np.zeros(x.size)
            if left > 0:
                term += (x - kv[j]) / left * n[j]
            if right > 0:
                term += (kv[j + k + 1] - x) / right * n[j + 1]
            n[j] = term
    return n[0], dn


def eval_basis_1d(knots: Sequence[float], xi, degree: int | None = None, closed_end: bool | None = None):
    """Evaluate the B-spline defined by a local knot vector and its derivative.

    Parameters
    ----------
    knots : sequence of float
        The ``p + 2`` knots of the function.
    xi : float or array_like
        Evaluation points. Points outside the support give zero.
    degree : int, optional
        Inferred from ``len(knots) - 2`` when omitted.
    closed_end : bool, optional
        Whether the last knot span is closed on the right. Defaults to
        closing it when the end knot has full multiplicity ``p + 1``.

    Returns
    -------
    value, derivative
        Scalars for scalar input, arrays otherwise.

    Notes
    -----
    With the default ``closed_end`` open boundary functions interpolate at
    the domain end.
    """
    p = len(knots) - 2 if degree is None else degree
    kv = np.asarray(validate_knots(knots, p))
    x = np.atleast_1d(np.asarray(xi, dtype=float))
    closed = multiplicity(kv, kv[-1]) == p + 1 if closed_end is None else closed_end
    val, der = _cox_de_boor(kv, p, x.ravel(), closed)
    val = val.reshape(x.shape)
    der = np.broadcast_to(der, x.ravel().shape).reshape(x.shape)
    if np.ndim(xi) == 0:
        return float(val[0]), float(der[0])
    return val, der


def alpha_coefficients(knots: Sequence[float], xi_hat: float) -> tuple[float, float]:
    """Scaling factors of the two children created by inserting ``xi_hat``."""
    kv = knots
    p = len(kv) - 2
    first, second, pen, last = kv[0], kv[1], kv[p], kv[p + 1]
    if pen <= xi_hat < last:
        a1 = 1.0
    else:
        a1 = (xi_hat - first) / (pen - first)
    if second < xi_hat < last:
        a2 = (last - xi_hat) / (last - second)
    else:
        a2 = 1.0
    return a1, a2


def split_knots(knots: Sequence[float], xi_hat: float):
    """Insert ``xi_hat`` into a local knot vector.

    Returns ``(kv1, kv2, alpha1, alpha2)`` such that
    ``N[kv] = alpha1 * N[kv1] + alpha2 * N[kv2]``.
    """
    kv = tuple(knots)
    p = len(kv) - 2
    if not kv[0] < xi_hat < kv[-1]:
        raise SplitError(f"knot {xi_hat} not inside the open support of {kv}")
    if multiplicity(kv, xi_hat) + 1 > p + 1:
        raise SplitError(f"inserting {xi_hat} into {kv} exceeds multiplicity {p + 1}")
    enlarged = sorted(kv + (float(xi_hat),))
    kv1 = tuple(enlarged[: p + 2])
    kv2 = tuple(enlarged[1:])
    a1, a2 = alpha_coefficients(kv, xi_hat)
    return kv1, kv2, a1, a2


def greville(knots: Sequence[float]) -> float:
    """Knot average of the interior knots."""
    return float(np.mean(knots[1:-1])) if len(knots) > 2 else 0.5 * (knots[0] + knots[-1])
