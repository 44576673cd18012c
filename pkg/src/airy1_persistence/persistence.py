"""Persistence probabilities, curves and exponent fits."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
import math
import os
import warnings

import numpy as np

from .errors import Airy1Error, ConfigurationError
from .fredholm import fredholm_det
from .operators import KernelParams, assemble_K_route_B, assemble_M_route_A

__all__ = [
    "CurvePoint",
    "FitResult",
    "L_MAX_FEASIBLE",
    "default_L_grid",
    "fit_window",
    "persistence_prob",
    "persistence_curve",
    "fit_exponent",
    "goe_cdf",
    "figure1_data",
    "figure2_data",
    "thread_count",
]

L_MAX_FEASIBLE = 3.0
THREADS_ENV = "AIRY1_THREADS"


@dataclass(frozen=True)
class CurvePoint:
    """One persistence-curve sample; ``error`` is set when it failed."""

    L: float
    prob: float
    log_prob: float
    err_est: float
    error: str = None

    @property
    def ok(self):
        return self.error is None and self.prob > 0 and math.isfinite(self.prob)


@dataclass(frozen=True)
class FitResult:
    """Least-squares line through ``(L, log P)``; ``kappa_hat = -slope``."""

    slope: float
    intercept: float
    residual_rms: float
    points_used: int

    @property
    def kappa_hat(self):
        return -self.slope


def thread_count(requested=None):
    """Worker count: explicit request, else ``$AIRY1_THREADS``, else CPU count."""
    if requested is None:
        env = os.environ.get(THREADS_ENV)
        requested = int(env) if env else (os.cpu_count() or 1)
    return max(1, int(requested))


def default_L_grid(l_max=2.0, l_step=0.05):
    """``L_n = n * l_step`` for ``n = 1 .. round(l_max / l_step)``."""
    count = int(round(l_max / l_step))
    if count < 1:
        raise ConfigurationError("empty L grid")
    return [round(n * l_step, 12) for n in range(1, count + 1)]


def fit_window(c):
    """Horizon grid used for fitting at threshold ``c``.

    For ``c >= 0`` this is the default grid up to ``L = 2``.  Below zero the
    probability drops quickly under the absolute accuracy of the
    determinant (about ``1e-15``); the grid is stopped where ``P`` is
    expected to reach about ``1e-11``.
    """
    if c >= 0:
        return default_L_grid()
    from .exponent import kappa_tilde

    rate = max(kappa_tilde(c).value, 1e-3)
    l_max = min(2.0, max(0.5, 22.0 / rate))
    return [L for L in default_L_grid() if L <= l_max + 1e-12]


def _assembler(route):
    if route == "A":
        return assemble_M_route_A
    if route == "B":
        return assemble_K_route_B
    raise ConfigurationError(f"route must be 'A' or 'B', got {route!r}")


def persistence_prob(c, L, params: KernelParams = None, route: str = "B",
                     refine: bool = True) -> CurvePoint:
    """``P(A_1(s) <= c, 0 <= s <= L)`` as a Fredholm determinant.

    Parameters
    ----------
    c, L : float
        Threshold and horizon, ``0 < L <= 3``.
    params : KernelParams, optional
        Discretization template; its ``c`` and ``L`` are replaced.  When
        truncations are left at their defaults they follow ``(c, L)``.
    route : {'A', 'B'}
        Bridge form (``A``) or kernel decomposition (``B``).
    refine : bool
        Estimate the error by doubling the nodes per panel.
    """
    c, L = float(c), float(L)
    if not 0 < L <= L_MAX_FEASIBLE:
        raise ConfigurationError(
            f"L={L} outside the feasible window (0, {L_MAX_FEASIBLE}]: the kernel of "
            "exp(-L Delta) B grows super-exponentially in L")
    params = KernelParams(c, L) if params is None else params.at(c, L)
    res = fredholm_det(_assembler(route), params, refine=refine)
    prob = res.value
    log_prob = math.log(min(max(prob, 1e-300), 1.0))
    return CurvePoint(L, prob, log_prob, res.err_est)


def persistence_curve(c, L_list=None, params: KernelParams = None, route: str = "B",
                      threads: int = None, refine: bool = True):
    """Persistence probabilities for every ``L`` in ``L_list``.

    Points are computed in parallel; failures are recorded on the point
    (``error`` set, ``prob`` NaN) and the curve continues.
    """
    if L_list is None:
        L_list = default_L_grid()
    L_list = [float(L) for L in L_list]
    if not L_list:
        raise ConfigurationError("L_list must be nonempty")
    if any(b <= a for a, b in zip(L_list[:-1], L_list[1:])):
        raise ConfigurationError("L_list must be increasing")
    for L in L_list:
        if not 0 < L <= L_MAX_FEASIBLE:
            raise ConfigurationError(f"L={L} outside the feasible window (0, {L_MAX_FEASIBLE}]")

    def one(L):
        try:
            return persistence_prob(c, L, params, route, refine)
        except (Airy1Error, FloatingPointError, np.linalg.LinAlgError) as exc:
            return CurvePoint(L, math.nan, math.nan, math.inf, error=str(exc))

    workers = min(thread_count(threads), len(L_list))
    if workers == 1:
        return [one(L) for L in L_list]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(one, L_list))


def fit_exponent(curve, burn_in: int = 0, max_rel_err: float = 1e-3) -> FitResult:
    """Ordinary least squares of ``log P`` against ``L``.

    Parameters
    ----------
    curve : sequence of CurvePoint
    burn_in : int
        Number of leading points to drop.
    max_rel_err : float
        Points whose ``err_est / prob`` exceeds this are excluded, as are
        failed and non-positive points; a warning lists how many.
    """
    pts = list(curve)[int(burn_in):]
    good = [p for p in pts if p.ok and p.err_est <= max_rel_err * p.prob]
    dropped = len(pts) - len(good)
    if dropped:
        warnings.warn(f"fit_exponent excluded {dropped} unreliable point(s)", stacklevel=2)
    if len(good) < 3:
        raise ConfigurationError(f"fit needs at least 3 usable points, got {len(good)}")
    x = np.array([p.L for p in good])
    y = np.array([p.log_prob for p in good])
    if np.ptp(x) == 0:
        raise ConfigurationError("all L values are equal")
    A = np.column_stack([x, np.ones_like(x)])
    (slope, intercept), *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - (slope * x + intercept)
    return FitResult(float(slope), float(intercept), float(np.sqrt(np.mean(resid ** 2))), len(good))


def goe_cdf(s, nodes_per_panel=60, panels=2, length=14.0):
    """``det(1 - Ai(x + y + 2 s))`` on ``L^2(0, inf)``, the GOE value ``F_1(2 s)``.

    Stand-alone half-line quadrature, independent of the grid code used for
    the persistence determinants.
    """
    from scipy.linalg import lu_factor

    from .quadrature import gauss_legendre
    from .special_functions import ai

    base = gauss_legendre(nodes_per_panel)
    width = length / panels
    x = np.concatenate([width * (k + 0.5 * (base.nodes + 1)) for k in range(panels)])
    w = np.concatenate([0.5 * width * base.weights for _ in range(panels)])
    sw = np.sqrt(w)
    m = np.eye(len(x)) - sw[:, None] * ai(x[:, None] + x[None, :] + 2.0 * s) * sw[None, :]
    lu, piv = lu_factor(m)
    sign = (-1.0) ** np.count_nonzero(piv != np.arange(len(piv)))
    d = np.diag(lu)
    return float(sign * np.prod(np.sign(d)) * np.exp(np.sum(np.log(np.abs(d)))))


def figure1_data(threads=None, route="B"):
    """Curve at ``c = 1`` on the default grid and its fit."""
    curve = persistence_curve(1.0, default_L_grid(), route=route, threads=threads)
    return curve, fit_exponent(curve)


def figure2_data(c_values=None, theory_step=0.05, threads=None, route="B"):
    """Theory curve of the continued exponent and fitted exponents.

    Returns
    -------
    theory : list of (c, kappa_tilde, err_est)
        Thresholds exactly at a jump point are skipped.
    fitted : list of (c, kappa_hat, residual_rms, points_used, error)
    """
    from .errors import PoleProximity
    from .exponent import kappa_tilde

    if c_values is None:
        c_values = [-3.5 + 0.5 * k for k in range(11)]
    theory = []
    count = int(round((1.5 - (-4.0)) / theory_step))
    for k in range(1, count):
        c = round(-4.0 + k * theory_step, 12)
        try:
            r = kappa_tilde(c)
        except PoleProximity:
            continue
        theory.append((c, r.value, r.err_est))
    fitted = []
    for c in c_values:
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                fit = fit_exponent(persistence_curve(c, fit_window(c), route=route,
                                                     threads=threads))
            fitted.append((c, fit.kappa_hat, fit.residual_rms, fit.points_used, None))
        except Airy1Error as exc:
            fitted.append((c, math.nan, math.nan, 0, str(exc)))
    return theory, fitted
