"""Determinants and traces of discretized operators."""

from __future__ import annotations

from dataclasses import dataclass
import math
import warnings

import numpy as np
from scipy.linalg import LinAlgWarning, lu_factor, matrix_balance

from .errors import ConfigurationError, NonFinite
from .operators import DiscretizedOperator, KernelParams

__all__ = [
    "DetResult",
    "det_one_minus",
    "fredholm_det",
    "trace",
    "trace_power",
    "log_det_series",
]

_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class DetResult:
    """Determinant value with a refinement-based error estimate."""

    value: float
    err_est: float
    nodes_used: int
    log_abs: float = float("nan")
    sign: float = 1.0


def _slogdet(a, balance):
    if not np.all(np.isfinite(a)):
        raise NonFinite("matrix has non-finite entries")
    if balance:
        # Exact power-of-two diagonal similarity; leaves the determinant
        # unchanged but tames the row/column scale disparity of the kernels.
        with np.errstate(all="ignore"), warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            a, _ = matrix_balance(a, permute=False)
        if not np.all(np.isfinite(a)):
            raise NonFinite("balancing overflowed; entries span too many magnitudes")
    with warnings.catch_warnings():
        # An exactly singular factor is a legal zero determinant.
        warnings.simplefilter("ignore", LinAlgWarning)
        lu, piv = lu_factor(a, check_finite=False)
    d = np.diag(lu)
    if not np.all(np.isfinite(d)):
        raise NonFinite("LU factorization produced non-finite pivots")
    if np.any(d == 0):
        return 0.0, -math.inf
    swaps = np.count_nonzero(piv != np.arange(len(piv)))
    sign = (-1.0) ** swaps * np.prod(np.sign(d))
    return float(sign), float(np.sum(np.log(np.abs(d))))


def det_one_minus(op, balance: bool = True) -> DetResult:
    """``det(I - M)`` by pivoted LU, accumulated as sign and log-magnitude.

    Parameters
    ----------
    op : DiscretizedOperator or ndarray
    balance : bool
        Apply a diagonal similarity balancing before factorizing.

    Returns
    -------
    DetResult
        ``err_est`` is zero here; see :func:`fredholm_det` for refinement.
    """
    m = op.matrix if isinstance(op, DiscretizedOperator) else np.asarray(op, dtype=float)
    n = m.shape[0]
    sign, log_abs = _slogdet(np.eye(n) - m, balance)
    value = sign * math.exp(log_abs) if log_abs > -math.inf else 0.0
    return DetResult(value=value, err_est=0.0, nodes_used=n, log_abs=log_abs, sign=sign)


def fredholm_det(assemble, params: KernelParams, refine: bool = True) -> DetResult:
    """Determinant of ``1 - assemble(params)`` with a node-doubling estimate.

    The value is the one at ``params``; ``err_est`` is the change under
    doubling ``nodes_per_panel`` plus a rounding floor.
    """
    base = det_one_minus(assemble(params))
    if not refine:
        return base
    fine = det_one_minus(assemble(params.refined(2)))
    err = abs(fine.value - base.value) + 16 * _EPS * max(1.0, abs(base.value))
    return DetResult(base.value, err, base.nodes_used, base.log_abs, base.sign)


def _matrix(op):
    return op.matrix if isinstance(op, DiscretizedOperator) else np.asarray(op, dtype=float)


def trace(op) -> float:
    return float(np.trace(_matrix(op)))


def trace_power(op, n: int) -> float:
    """``Tr(M**n)`` by repeated multiplication, ``1 <= n <= 16``."""
    if int(n) != n or not 1 <= n <= 16:
        raise ConfigurationError(f"trace_power needs 1 <= n <= 16, got {n}")
    m = _matrix(op)
    p = m
    for _ in range(int(n) - 1):
        p = p @ m
    return float(np.trace(p))


def log_det_series(op, terms: int) -> float:
    """Truncated trace expansion ``-sum_{n <= terms} Tr(M^n) / n``."""
    m = _matrix(op)
    total = 0.0
    p = np.eye(m.shape[0])
    for n in range(1, terms + 1):
        p = p @ m
        total -= np.trace(p) / n
    return float(total)
