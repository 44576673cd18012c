"""Gauss-Legendre rules, composite panel rules and adaptive integration."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
import heapq
import math
import warnings

import numpy as np

from .errors import ConfigurationError, NonConvergence

__all__ = [
    "QuadratureRule",
    "PanelRule",
    "AccuracyWarning",
    "gauss_legendre",
    "map_rule",
    "panel_rule",
    "integrate_adaptive",
]

MAX_NODES = 2048


class AccuracyWarning(UserWarning):
    """Adaptive integration finished above the requested tolerance."""


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class QuadratureRule:
    """Nodes and positive weights for an interval ``(a, b)``."""

    nodes: np.ndarray
    weights: np.ndarray
    domain: tuple

    def __post_init__(self):
        object.__setattr__(self, "nodes", _frozen(self.nodes))
        object.__setattr__(self, "weights", _frozen(self.weights))
        object.__setattr__(self, "domain", (float(self.domain[0]), float(self.domain[1])))

    def integrate(self, f):
        """Apply the rule to a vectorized callable."""
        return np.dot(self.weights, f(self.nodes))


def _legendre(n, x):
    """Return ``P_n(x)`` and ``P_{n-1}(x)`` by the three-term recurrence."""
    p0 = np.ones_like(x)
    p1 = x.copy()
    for j in range(2, n + 1):
        p0, p1 = p1, ((2 * j - 1) * x * p1 - (j - 1) * p0) / j
    return p1, p0


@lru_cache(maxsize=64)
def _legendre_nodes(n):
    # Newton in the angle theta = arccos(x) keeps 1 - x**2 = sin(theta)**2
    # accurate next to the endpoints, which matters for the weights.
    k = np.arange(1, n + 1)
    theta = math.pi * (k - 0.25) / (n + 0.5)
    for _ in range(100):
        x = np.cos(theta)
        s = np.sin(theta)
        p, q = _legendre(n, x)
        dp_dx = n * (q - x * p) / (s * s)
        step = p / (s * dp_dx)
        theta = theta + step
        if np.max(np.abs(step)) < 1e-16:
            break
    x = np.cos(theta)
    s = np.sin(theta)
    p, q = _legendre(n, x)
    dp_dtheta = n * (q - x * p) / s
    w = 2.0 / (dp_dtheta * dp_dtheta)
    order = np.argsort(x)
    x, w = x[order], w[order]
    # Enforce exact symmetry.
    x = 0.5 * (x - x[::-1])
    w = 0.5 * (w + w[::-1])
    return x, w


def gauss_legendre(n: int) -> QuadratureRule:
    """Gauss-Legendre rule with ``n`` nodes on ``(-1, 1)``.

    Nodes are found by Newton iteration on the three-term Legendre
    recurrence, starting from Chebyshev-like initial guesses.
    """
    if isinstance(n, bool) or int(n) != n or not 1 <= n <= MAX_NODES:
        raise ConfigurationError(f"gauss_legendre needs 1 <= n <= {MAX_NODES}, got {n!r}")
    n = int(n)
    if n == 1:
        return QuadratureRule(np.array([0.0]), np.array([2.0]), (-1.0, 1.0))
    x, w = _legendre_nodes(n)
    return QuadratureRule(x, w, (-1.0, 1.0))


def map_rule(rule: QuadratureRule, a: float, b: float) -> QuadratureRule:
    """Affine transplant of ``rule`` onto ``(a, b)``."""
    a, b = float(a), float(b)
    if not (math.isfinite(a) and math.isfinite(b)) or not a < b:
        raise ConfigurationError(f"map_rule needs finite a < b, got ({a}, {b})")
    lo, hi = rule.domain
    scale = (b - a) / (hi - lo)
    return QuadratureRule(a + (rule.nodes - lo) * scale, rule.weights * scale, (a, b))


@dataclass(frozen=True)
class PanelRule:
    """A union of contiguous panels; every breakpoint is a panel boundary."""

    panels: tuple
    breakpoints: tuple = field(default=())

    def __post_init__(self):
        panels = tuple(self.panels)
        if not panels:
            raise ConfigurationError("PanelRule needs at least one panel")
        for left, right in zip(panels[:-1], panels[1:]):
            if left.domain[1] != right.domain[0]:
                raise ConfigurationError("panel domains must be contiguous")
        edges = {p.domain[0] for p in panels} | {panels[-1].domain[1]}
        for bp in self.breakpoints:
            if float(bp) not in edges:
                raise ConfigurationError(f"breakpoint {bp} is not a panel boundary")
        object.__setattr__(self, "panels", panels)
        object.__setattr__(self, "breakpoints", tuple(float(b) for b in self.breakpoints))

    @property
    def domain(self):
        return (self.panels[0].domain[0], self.panels[-1].domain[1])

    @property
    def nodes(self):
        return np.concatenate([p.nodes for p in self.panels])

    @property
    def weights(self):
        return np.concatenate([p.weights for p in self.panels])

    def integrate(self, f):
        return sum(p.integrate(f) for p in self.panels)


def panel_rule(a, b, n, breakpoints=(), panels_per_segment=1):
    """Composite Gauss-Legendre rule on ``[a, b]``.

    Each segment between consecutive breakpoints is split into
    ``panels_per_segment`` equal panels of ``n`` nodes.
    """
    a, b = float(a), float(b)
    if not a < b:
        raise ConfigurationError(f"panel_rule needs a < b, got ({a}, {b})")
    inner = sorted({float(p) for p in breakpoints if a < p < b})
    edges = [a] + inner + [b]
    base = gauss_legendre(n)
    panels = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        cuts = np.linspace(lo, hi, panels_per_segment + 1)
        cuts[0], cuts[-1] = lo, hi
        for p, q in zip(cuts[:-1], cuts[1:]):
            panels.append(map_rule(base, p, q))
    return PanelRule(tuple(panels), tuple(inner))


def _evaluate(f, x):
    try:
        y = np.asarray(f(x))
    except TypeError:
        y = None
    if y is None or y.shape != x.shape:
        y = np.array([f(t) for t in x])
    return y


def integrate_adaptive(f, a, b, tol=1e-10, breakpoints=(), order=15, max_depth=40,
                       max_intervals=20000):
    """Globally adaptive Gauss-Legendre integration.

    Each interval is integrated with an ``order``-point rule; the error is
    estimated by comparison with the same rule applied to both halves.  The
    interval with the largest estimate is bisected until the total falls
    below ``tol`` (absolute).

    Parameters
    ----------
    f : callable
        Vectorized integrand; scalar callables are accepted and looped.
        Complex values are supported.
    a, b : float
        Finite integration limits.
    tol : float
        Absolute tolerance.
    breakpoints : sequence of float
        Points of non-smoothness; intervals are split there first.

    Returns
    -------
    value, err_est

    Raises
    ------
    NonConvergence
        If the depth cap is reached with ``err_est > 10 * tol``.
    """
    a, b = float(a), float(b)
    if a == b:
        return 0.0, 0.0
    sign = 1.0
    if a > b:
        a, b, sign = b, a, -1.0
    base = gauss_legendre(order)

    def rule(lo, hi):
        mid = 0.5 * (lo + hi)
        half = 0.5 * (hi - lo)
        x = mid + half * base.nodes
        return half * np.dot(base.weights, _evaluate(f, x))

    def node(lo, hi, depth, whole=None):
        if whole is None:
            whole = rule(lo, hi)
        mid = 0.5 * (lo + hi)
        left, right = rule(lo, mid), rule(mid, hi)
        split = left + right
        err = abs(split - whole)
        return (-err, lo, hi, depth, split, left, right)

    edges = [a] + sorted({float(p) for p in breakpoints if a < p < b}) + [b]
    heap = [node(lo, hi, 0) for lo, hi in zip(edges[:-1], edges[1:])]
    heapq.heapify(heap)
    capped = []
    while heap:
        total_err = sum(-h[0] for h in heap) + sum(-h[0] for h in capped)
        if total_err <= tol or len(heap) + len(capped) > max_intervals:
            break
        item = heapq.heappop(heap)
        _, lo, hi, depth, _, left, right = item
        if depth >= max_depth:
            capped.append(item)
            continue
        mid = 0.5 * (lo + hi)
        heapq.heappush(heap, node(lo, mid, depth + 1, left))
        heapq.heappush(heap, node(mid, hi, depth + 1, right))
    items = heap + capped
    value = sum(h[4] for h in items)
    err = sum(-h[0] for h in items)
    if err > 10 * tol and (capped or len(items) > max_intervals):
        raise NonConvergence(f"adaptive integration on [{a}, {b}] stalled at error {err:.3g}")
    if err > tol:
        warnings.warn(f"adaptive integration error {err:.3g} exceeds tol {tol:.3g}",
                      AccuracyWarning, stacklevel=2)
    return sign * value, err
