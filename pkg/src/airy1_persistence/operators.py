"""Kernels and their Nystrom discretization.

Operators on ``L^2(R)`` are represented on a truncated composite
Gauss-Legendre grid in the symmetrized embedding
``M[i, j] = sqrt(w_i) K(x_i, x_j) sqrt(w_j)``.  In this embedding
composition of operators is the matrix product and ``det(1 - K)`` is the
ordinary matrix determinant of ``I - M``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
import math

import numpy as np

from .errors import ConfigurationError, KernelOverflow
from .quadrature import panel_rule
from .special_functions import ai, ai_scaled

__all__ = [
    "KernelParams",
    "Grid",
    "DiscretizedOperator",
    "default_truncation",
    "make_grid",
    "kernel_b0c",
    "kernel_b0c_hat",
    "kernel_b0c_tilde",
    "kernel_heat",
    "kernel_heat_tilde",
    "kernel_invheat_b0c",
    "kernel_bridge",
    "discretize",
    "project",
    "grid_route_B",
    "grid_route_A",
    "assemble_K_route_B",
    "assemble_M_route_A",
]

# exp() overflows just above this.
_LOG_MAX = 709.0


def default_truncation(c, L):
    """Default ``(d_minus, d_plus)`` for threshold ``c`` and horizon ``L``.

    The left truncation must grow like ``L**2``: the kernel of
    ``exp(-L Delta) B_{0,c}`` carries weight out to about ``-2 L**2`` before
    the Gaussian factors take over.  Negative thresholds shift the Airy
    arguments left, which needs extra room on the right.
    """
    d_minus = 8.0 + 3.5 * L * L
    d_plus = 10.0 + 3.0 * max(0.0, -c)
    return d_minus, d_plus


@dataclass(frozen=True)
class KernelParams:
    """Threshold, horizon and discretization controls.

    ``d_minus`` and ``d_plus`` default to :func:`default_truncation`.
    """

    c: float
    L: float
    d_minus: float = None
    d_plus: float = None
    nodes_per_panel: int = 80
    panels_per_side: int = 2
    auto_truncation: tuple = field(default=(), repr=False, compare=False)

    def __post_init__(self):
        if not (math.isfinite(self.c) and math.isfinite(self.L)):
            raise ConfigurationError("c and L must be finite")
        if self.L <= 0:
            raise ConfigurationError(f"L must be positive, got {self.L}")
        dm, dp = default_truncation(self.c, self.L)
        auto = set(self.auto_truncation)
        if self.d_minus is None or "d_minus" in auto:
            object.__setattr__(self, "d_minus", dm)
            auto.add("d_minus")
        if self.d_plus is None or "d_plus" in auto:
            object.__setattr__(self, "d_plus", dp)
            auto.add("d_plus")
        object.__setattr__(self, "auto_truncation", tuple(sorted(auto)))
        if not (self.d_minus > 0 and self.d_plus > 0):
            raise ConfigurationError("truncation bounds must be positive")
        if int(self.nodes_per_panel) < 1 or int(self.panels_per_side) < 1:
            raise ConfigurationError("node and panel counts must be positive")

    @property
    def theorem_regime(self):
        """True when ``c >= 3/2``, where the series exponent is proven."""
        return self.c >= 1.5

    def at(self, c, L):
        """Same controls at another ``(c, L)``; default truncations follow."""
        return replace(self, c=float(c), L=float(L))

    def refined(self, factor=2):
        return replace(self, nodes_per_panel=int(self.nodes_per_panel * factor))


@dataclass(frozen=True)
class Grid:
    """Quadrature nodes on a truncated line, with panel breakpoints."""

    points: np.ndarray
    weights: np.ndarray
    breakpoints: tuple = field(default=())

    def __post_init__(self):
        pts = np.array(self.points, dtype=float)
        wts = np.array(self.weights, dtype=float)
        if pts.shape != wts.shape or pts.ndim != 1:
            raise ConfigurationError("points and weights must be 1-D of equal length")
        if np.any(np.diff(pts) <= 0) or np.any(wts <= 0):
            raise ConfigurationError("points must increase and weights be positive")
        pts.setflags(write=False)
        wts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", wts)
        object.__setattr__(self, "breakpoints", tuple(float(b) for b in self.breakpoints))

    def __len__(self):
        return len(self.points)

    @property
    def sqrt_weights(self):
        return np.sqrt(self.weights)

    def has_breakpoint(self, b):
        return float(b) in self.breakpoints


def make_grid(lo, hi, breakpoints, nodes_per_panel, panels_per_side=2):
    """Composite grid on ``[lo, hi]`` with panels split at ``breakpoints``."""
    rule = panel_rule(lo, hi, nodes_per_panel, breakpoints, panels_per_side)
    kept = tuple(b for b in sorted(set(float(b) for b in breakpoints)) if lo < b < hi)
    return Grid(rule.nodes, rule.weights, kept)


def grid_route_B(params: KernelParams) -> Grid:
    return make_grid(-params.d_minus, params.d_plus, (0.0,),
                     params.nodes_per_panel, params.panels_per_side)


def grid_route_A(params: KernelParams) -> Grid:
    c = params.c
    lo = min(0.0, c) - params.d_minus
    hi = max(0.0, c) + params.d_plus
    return make_grid(lo, hi, (0.0, c), params.nodes_per_panel, params.panels_per_side)


# ---------------------------------------------------------------- kernels


def kernel_b0c(x, y, c):
    """``Ai(x + y + 2c)``."""
    return ai(np.add(x, y) + 2.0 * c)


def kernel_b0c_hat(x, y, c):
    """``Ai(x - y + 2c)``."""
    return ai(np.subtract(x, y) + 2.0 * c)


def kernel_b0c_tilde(x, y, c):
    """``Ai(y - x + 2c)``."""
    return ai(np.subtract(y, x) + 2.0 * c)


def _check_L(L):
    if not L > 0:
        raise ConfigurationError(f"heat kernel needs L > 0, got {L}")


def kernel_heat(x, y, L):
    """Gaussian transition density ``exp(-(x-y)^2/(4L)) / sqrt(4 pi L)``."""
    _check_L(L)
    d = np.subtract(x, y)
    return np.exp(-d * d / (4.0 * L)) / math.sqrt(4.0 * math.pi * L)


def kernel_heat_tilde(x, y, L):
    """Reflected heat kernel ``kernel_heat(-x, y, L)``."""
    return kernel_heat(np.negative(x), y, L)


def kernel_invheat_b0c(x, y, L, c):
    """Kernel of ``exp(-L Delta) B_{0,c}``.

    ``exp(-2L^3/3 - L s) Ai(L^2 + s)`` with ``s = x + y + 2c``.  Where the
    Airy argument is positive the exponentials are merged with the scaled
    Airy function, so large prefactors never meet tiny Airy values.

    Raises
    ------
    KernelOverflow
        When an entry exceeds the floating point range.  The location is the
        index of the first such entry in the broadcast input shape.
    """
    _check_L(L)
    s = np.add(x, y) + 2.0 * c
    t = L * L + s
    pos = t > 0
    zeta = np.where(pos, (2.0 / 3.0) * np.abs(t) ** 1.5, 0.0)
    log_pref = -2.0 * L ** 3 / 3.0 - L * s - zeta
    scaled = ai_scaled(t)
    log_mag = log_pref + np.log(np.maximum(np.abs(scaled), 1e-300))
    if np.any(log_mag > _LOG_MAX):
        idx = np.unravel_index(int(np.argmax(log_mag)), np.shape(log_mag))
        raise KernelOverflow(
            f"exp(-L Delta) B_0c entry of size exp({float(np.max(log_mag)):.1f}) "
            f"overflows at L={L}, c={c}",
            location=tuple(int(i) for i in idx),
            log_magnitude=float(np.max(log_mag)),
        )
    return np.exp(log_pref) * scaled


def kernel_bridge(x, y, L, c):
    """Heat kernel killed at the barrier ``c`` (reflection principle).

    ``[G(x - y) - G(x + y - 2c)]`` for ``x, y < c`` and zero otherwise,
    written as ``G(x - y) (1 - exp(-(c - x)(c - y)/L))``.
    """
    _check_L(L)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    a = c - x
    b = c - y
    below = (a > 0) & (b > 0)
    g = kernel_heat(x, y, L)
    return np.where(below, g * -np.expm1(-np.where(below, a * b, 0.0) / L), 0.0)


# ------------------------------------------------------- discretization


@dataclass(frozen=True)
class DiscretizedOperator:
    """Matrix of an integral operator in the ``sqrt(w)`` embedding."""

    grid: Grid
    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=float)
        if m.shape != (len(self.grid), len(self.grid)):
            raise ConfigurationError("matrix dimension must equal grid size")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    def _same_grid(self, other):
        if other.grid is not self.grid and not (
            len(other.grid) == len(self.grid)
            and np.array_equal(other.grid.points, self.grid.points)
        ):
            raise ConfigurationError("operators live on different grids")

    def __matmul__(self, other):
        self._same_grid(other)
        return DiscretizedOperator(self.grid, self.matrix @ other.matrix)

    def __add__(self, other):
        self._same_grid(other)
        return DiscretizedOperator(self.grid, self.matrix + other.matrix)

    def __sub__(self, other):
        self._same_grid(other)
        return DiscretizedOperator(self.grid, self.matrix - other.matrix)

    def __neg__(self):
        return DiscretizedOperator(self.grid, -self.matrix)

    def trace(self):
        return float(np.trace(self.matrix))

    def kernel_values(self):
        """Undo the weight embedding: ``K(x_i, x_j)``."""
        sw = self.grid.sqrt_weights
        return self.matrix / sw[:, None] / sw[None, :]


def discretize(kernel, grid: Grid) -> DiscretizedOperator:
    """Nystrom matrix of a vectorized ``kernel(x, y)`` on ``grid``.

    Overflow signals from the kernel are re-raised with the grid location
    ``(i, j)`` and the coordinates attached to the message.
    """
    x = grid.points
    X, Y = np.meshgrid(x, x, indexing="ij")
    try:
        K = np.asarray(kernel(X, Y), dtype=float)
    except KernelOverflow as exc:
        loc = exc.location
        where = ""
        if loc is not None and len(loc) == 2:
            where = f" at grid entry {loc} (x={x[loc[0]]:.4g}, y={x[loc[1]]:.4g})"
        raise KernelOverflow(str(exc) + where, location=loc,
                             log_magnitude=exc.log_magnitude) from exc
    if K.shape != X.shape:
        K = np.broadcast_to(K, X.shape)
    sw = grid.sqrt_weights
    return DiscretizedOperator(grid, sw[:, None] * K * sw[None, :])


def _region_mask(grid, region):
    if not grid.has_breakpoint(0.0):
        raise ConfigurationError("projection needs a grid breakpoint at 0")
    if region == "positive":
        return grid.points > 0
    if region == "negative":
        return grid.points <= 0
    raise ConfigurationError(f"unknown region {region!r}")


def project(op: DiscretizedOperator, side: str, region: str) -> DiscretizedOperator:
    """Compose with ``P_0`` (positive) or ``1 - P_0`` (negative).

    ``side='left'`` zeroes rows outside the region, ``side='right'`` columns.
    """
    keep = _region_mask(op.grid, region)
    m = np.array(op.matrix)
    if side == "left":
        m[~keep, :] = 0.0
    elif side == "right":
        m[:, ~keep] = 0.0
    else:
        raise ConfigurationError(f"unknown side {side!r}")
    return DiscretizedOperator(op.grid, m)


def _overflow_hint(exc, params):
    return KernelOverflow(
        f"{exc}; try a smaller d_minus than {params.d_minus:g} or a smaller L",
        location=exc.location, log_magnitude=exc.log_magnitude)


def assemble_K_route_B(params: KernelParams) -> DiscretizedOperator:
    """``P0 B + (1-P0) e^{L Delta} P0 E + (1-P0) e^{L Delta~} (1-P0) E``.

    Here ``E = exp(-L Delta) B_{0,c}``.  Each factor is discretized on the
    same grid and the compositions are matrix products.
    """
    c, L = params.c, params.L
    grid = grid_route_B(params)
    try:
        E = discretize(lambda x, y: kernel_invheat_b0c(x, y, L, c), grid)
    except KernelOverflow as exc:
        raise _overflow_hint(exc, params) from exc
    B = discretize(lambda x, y: kernel_b0c(x, y, c), grid)
    G = discretize(lambda x, y: kernel_heat(x, y, L), grid)
    Gt = discretize(lambda x, y: kernel_heat_tilde(x, y, L), grid)

    pos = grid.points > 0
    neg = ~pos
    m = np.zeros((len(grid), len(grid)))
    m[pos] = B.matrix[pos]
    m[neg] = (G.matrix[np.ix_(neg, pos)] @ E.matrix[pos]
              + Gt.matrix[np.ix_(neg, neg)] @ E.matrix[neg])
    return DiscretizedOperator(grid, m)


def assemble_M_route_A(params: KernelParams, form: str = "stable") -> DiscretizedOperator:
    """Operator ``B0 - Lambda e^{-L Delta} B0`` with ``det(1 - M) = P(c, L)``.

    ``form='literal'`` subtracts the two discretized terms as written.
    Both are huge and nearly equal on rows far below ``c``, so the default
    ``form='stable'`` uses ``B0 = e^{L Delta} e^{-L Delta} B0`` on rows
    ``x < c``, giving ``M = (G - Lambda) e^{-L Delta} B0`` there and
    ``M = B0`` on rows ``x >= c``, where the bridge kernel vanishes.
    """
    c, L = params.c, params.L
    grid = grid_route_A(params)
    try:
        E0 = discretize(lambda x, y: kernel_invheat_b0c(x, y, L, 0.0), grid)
    except KernelOverflow as exc:
        raise _overflow_hint(exc, params) from exc
    B0 = discretize(lambda x, y: kernel_b0c(x, y, 0.0), grid)
    if form == "literal":
        lam = discretize(lambda x, y: kernel_bridge(x, y, L, c), grid)
        return B0 - lam @ E0
    if form != "stable":
        raise ConfigurationError(f"unknown form {form!r}")
    below = grid.points < c
    # G - Lambda is the reflected Gaussian below the barrier, G elsewhere.
    killed = discretize(
        lambda x, y: np.where((x < c) & (y < c), kernel_heat(x, 2.0 * c - y, L),
                              kernel_heat(x, y, L)), grid)
    m = np.array(B0.matrix)
    m[below] = killed.matrix[below] @ E0.matrix
    return DiscretizedOperator(grid, m)
