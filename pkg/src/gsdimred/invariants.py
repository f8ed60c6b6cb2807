"""Run-time checks of the monotonicity and distinctness properties.

Every fit calls one of these before returning. A violation beyond rounding
raises :class:`~gsdimred.orthogonalizer.NumericalError`.
"""

from __future__ import annotations

import numpy as np

from .orthogonalizer import NumericalError

MONOTONE_TOL = 1e-10


def _tol(scale: float) -> float:
    return MONOTONE_TOL * max(1.0, scale)


def check_nonincreasing(values: np.ndarray, name: str, scale: float) -> None:
    """Consecutive entries (or rows, per coordinate) may not increase."""
    values = np.asarray(values, dtype=float)
    if values.shape[0] < 2:
        return
    rise = np.max(values[1:] - values[:-1])
    if rise > _tol(scale):
        raise NumericalError(f"{name} increased by {rise:.3e} between steps")


def check_distinct(indices, name: str = "selected indices") -> None:
    indices = list(indices)
    if len(set(indices)) != len(indices):
        raise NumericalError(f"{name} repeat: {indices}")


def check_extraction_traces(lambda_trace, trace_trace) -> None:
    """``lambda_max(Sigma_j)`` and ``trace(Sigma_j)`` are non-increasing in j."""
    scale = float(trace_trace[0]) if len(trace_trace) else 1.0
    check_nonincreasing(lambda_trace, "lambda_max(Sigma_j)", scale)
    check_nonincreasing(trace_trace, "trace(Sigma_j)", scale)


def check_sigma_trace(sigma_trace) -> None:
    """Each coordinate of ``sigma_j`` is non-increasing in j."""
    sigma_trace = np.asarray(sigma_trace, dtype=float)
    if sigma_trace.size == 0:
        return
    scale = float(np.max(sigma_trace[0]))
    check_nonincreasing(sigma_trace, "sigma_j", scale)
