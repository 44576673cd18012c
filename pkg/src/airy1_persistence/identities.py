"""Numerical verification of Airy-kernel identities and trace estimates.

Every check integrates one side of an identity by quadrature and compares
with the closed form.  Checks are independent; a failing check never
aborts the suite.
"""

from __future__ import annotations

from dataclasses import dataclass
import math

import numpy as np

from .operators import (
    discretize,
    kernel_b0c,
    kernel_b0c_hat,
    kernel_heat_tilde,
    kernel_invheat_b0c,
    make_grid,
)
from .quadrature import integrate_adaptive, panel_rule
from .special_functions import ai, ai_prime

__all__ = [
    "CheckReport",
    "run_identity_suite",
    "hat_b_power",
    "heat_tilde_hat_b_power",
    "hat_b_power_invheat",
    "squared_airy_moment",
    "airy_square_contour",
    "laplace_transform_ai",
    "hs_norm_squared",
    "trace_residual",
    "leading_trace_term",
    "beta_bound",
    "report_csv",
]


@dataclass(frozen=True)
class CheckReport:
    """Outcome of one check; ``passed`` is ``abs_err <= tol``."""

    name: str
    measured: float
    expected: float
    abs_err: float
    tol: float
    passed: bool


def _report(name, measured, expected, tol):
    err = abs(measured - expected)
    return CheckReport(name, float(measured), float(expected), float(err), float(tol),
                       bool(err <= tol))


# ------------------------------------------------------ closed forms


def hat_b_power(n, x, y, c):
    """Closed form ``n^{-1/3} Ai(n^{-1/3}(x - y + 2 n c))`` of the n-fold product."""
    s = n ** (-1.0 / 3.0)
    return s * ai(s * (np.subtract(x, y) + 2.0 * n * c))


def heat_tilde_hat_b_power(n, x, y, L, c):
    """Closed form of the reflected heat kernel applied to the n-fold product.

    ``n^{-1/3} exp(2Lc + 2L^3/(3n^2) - L(x+y)/n)``
    ``* Ai(L^2/n^{4/3} + (2nc - x - y)/n^{1/3})``.
    """
    s = np.add(x, y)
    pref = 2.0 * L * c + 2.0 * L ** 3 / (3.0 * n * n) - L * s / n
    return n ** (-1.0 / 3.0) * np.exp(pref) * ai(L * L / n ** (4.0 / 3.0)
                                               + (2.0 * n * c - s) / n ** (1.0 / 3.0))


def hat_b_power_invheat(n, x, y, L, c):
    """Closed form of the (n-1)-fold product composed with ``exp(-L Delta) B_{0,c}``."""
    s = np.add(x, y)
    pref = -2.0 * L * c - 2.0 * L ** 3 / (3.0 * n * n) - L * s / n
    return n ** (-1.0 / 3.0) * np.exp(pref) * ai(L * L / n ** (4.0 / 3.0)
                                               + (s + 2.0 * n * c) / n ** (1.0 / 3.0))


# --------------------------------------------------------- quadratures


def _line_nodes(lo=-30.0, hi=30.0, panels=24, order=40):
    rule = panel_rule(lo, hi, order, (), panels)
    return rule.nodes, rule.weights


def _hat_b_power_quadrature(n, x, y, c):
    """n-fold product by composite quadrature over the intermediate variables."""
    z, w = _line_nodes()
    left = ai(x - z + 2.0 * c) * w
    if n == 1:
        return float(ai(x - y + 2.0 * c))
    right = ai(z - y + 2.0 * c)
    mid = ai(z[:, None] - z[None, :] + 2.0 * c) * w[None, :]
    vec = right
    for _ in range(n - 2):
        vec = mid @ vec
    return float(left @ vec)


def _heat_tilde_hat_b_quadrature(n, x, y, L, c):
    # Heat factor localizes z near -x; the inner product uses the closed form.
    f = lambda z: kernel_heat_tilde(x, z, L) * hat_b_power(n, z, y, c)
    lo = -x - 14.0 * math.sqrt(L)
    hi = -x + 14.0 * math.sqrt(L)
    return integrate_adaptive(f, lo, hi, 1e-13)[0]


def _hat_b_power_invheat_quadrature(n, x, y, L, c):
    f = lambda z: hat_b_power(n - 1, x, z, c) * kernel_invheat_b0c(z, y, L, c)
    return integrate_adaptive(f, -40.0, 30.0, 1e-13, breakpoints=np.arange(-35, 30, 5.0))[0]


def squared_airy_moment(L, tol=1e-13):
    """``int exp(L y) Ai(y)^2 dy`` by adaptive quadrature."""
    lo = -max(40.0, 36.0 / L)
    f = lambda y: np.exp(L * y) * ai(y) ** 2
    return integrate_adaptive(f, lo, 20.0, tol, breakpoints=np.arange(lo, 20.0, 2.0)[1:])[0]


def laplace_transform_ai(r, tol=1e-13):
    """``int exp(r x) Ai(x) dx`` by adaptive quadrature."""
    lo = -max(40.0, 40.0 / r) if r < 2 else -40.0
    hi = 20.0 + 2 * r * r
    f = lambda x: np.exp(r * x) * ai(x)
    return integrate_adaptive(f, lo, hi, tol, breakpoints=np.arange(lo, hi, 2.0)[1:])[0]


def airy_square_contour(y, eps=2.0, half_width=14.0):
    """``Ai(y)^2`` from the vertical-line integral of ``w^{-1/2} e^{w^3/12 - w y}``.

    On ``w = eps + i t`` the integrand decays like ``exp(-eps t^2 / 4)``.
    """
    def f(t):
        w = eps + 1j * t
        return np.exp(w ** 3 / 12.0 - w * y) / np.sqrt(w)

    val, _ = integrate_adaptive(f, -half_width, half_width, 1e-14,
                                breakpoints=np.arange(-12.0, 13.0, 2.0))
    # dw = i dt cancels the 1/i of the prefactor.
    return float((val / (4.0 * math.pi ** 1.5)).real)


def hs_norm_squared(r, c, order=40):
    """``int_0^inf dx int_R dy exp(-2r(x-y)) Ai(x+y+2c)^2`` by iterated quadrature."""
    xr = panel_rule(0.0, 16.0, order, (), 4)
    inner = []
    for x in xr.nodes:
        lo = -x - 2 * c - max(30.0, 40.0 / r)
        hi = -x - 2 * c + 14.0
        f = lambda y, x=x: np.exp(-2.0 * r * (x - y)) * ai(x + y + 2.0 * c) ** 2
        inner.append(integrate_adaptive(f, lo, hi, 1e-15,
                                        breakpoints=np.arange(lo, hi, 4.0)[1:])[0])
    return float(np.dot(xr.weights, inner))


# ------------------------------------------------------ trace estimates


def _trace_grid(nodes_per_panel=80):
    return make_grid(-20.0, 25.0, (0.0,), nodes_per_panel, 3)


def trace_residual(c, L, nodes_per_panel=80):
    """``(Tr K, 2 Tr(P0 B) - 2 L Ai'(2c))`` with ``K`` from the route-B assembly."""
    from .operators import KernelParams, assemble_K_route_B

    params = KernelParams(c, L, nodes_per_panel=nodes_per_panel)
    K = assemble_K_route_B(params)
    x = K.grid.points
    pos = x > 0
    tr_p0b = float(np.sum(K.grid.weights[pos] * kernel_b0c(x[pos], x[pos], c)))
    return K.trace(), 2.0 * tr_p0b - 2.0 * L * float(ai_prime(2.0 * c))


def leading_trace_term(n, c, L, nodes_per_panel=80):
    """``Tr((1-P0) e^{L Delta~} Bhat^n (1-P0) e^{-L Delta} B_{0,c})`` on a grid.

    All factors are discretized independently of the closed forms.
    """
    grid = _trace_grid(nodes_per_panel)
    Gt = discretize(lambda a, b: kernel_heat_tilde(a, b, L), grid).matrix
    Bh = discretize(lambda a, b: kernel_b0c_hat(a, b, c), grid).matrix
    E = discretize(lambda a, b: kernel_invheat_b0c(a, b, L, c), grid).matrix
    left = Gt
    for _ in range(n):
        left = left @ Bh
    neg = grid.points <= 0
    return float(np.sum(left[np.ix_(neg, neg)] * E[np.ix_(neg, neg)].T))


def beta_bound(c, r=None):
    """``max{2 e^{r^3/3 - 2rc}, e^{(r-1/7)^3/3 - 2(r-1/7)c}}``.

    With ``r`` omitted the smallest value over the admissible range
    ``1 <= r^2 <= 2c`` is returned.
    """
    def beta(r):
        s = r - 1.0 / 7.0
        return max(2.0 * math.exp(r ** 3 / 3.0 - 2.0 * r * c),
                   math.exp(s ** 3 / 3.0 - 2.0 * s * c))

    if r is not None:
        return beta(r)
    hi = math.sqrt(2.0 * c)
    if hi < 1.0:
        raise ValueError("beta bound needs c >= 1/2")
    return min(beta(t) for t in np.linspace(1.0, hi, 401))


# -------------------------------------------------------------- suite


def _checks(level):
    c = 1.0
    pts = [(0.3, -0.2), (-1.0, 0.5)]

    def c_power(n):
        def run():
            worst = None
            for x, y in pts:
                rep = _report(f"B-hat power n={n} (x,y)=({x},{y})", _hat_b_power_quadrature(n, x, y, c),
                              float(hat_b_power(n, x, y, c)), 1e-7)
                if worst is None or rep.abs_err > worst.abs_err:
                    worst = rep
            return CheckReport(f"B-hat power n={n}", worst.measured, worst.expected, worst.abs_err,
                               worst.tol, worst.passed)
        return run

    def c_heat_power():
        n, L = 2, 1.0
        x, y = 0.3, -0.2
        return _report("heat-reflected B-hat power n=2 L=1", _heat_tilde_hat_b_quadrature(n, x, y, L, c),
                       float(heat_tilde_hat_b_power(n, x, y, L, c)), 1e-7)

    def c_power_invheat(n):
        def run():
            L = 1.0
            x, y = 0.3, -0.2
            return _report(f"B-hat power inverse heat n={n} L=1", _hat_b_power_invheat_quadrature(n, x, y, L, c),
                           float(hat_b_power_invheat(n, x, y, L, c)), 1e-7)
        return run

    def c_moment(L):
        def run():
            exact = math.exp(L ** 3 / 12.0) / math.sqrt(4.0 * L * math.pi)
            return _report(f"squared Airy moment L={L:g}", squared_airy_moment(L), exact, 1e-8 * exact)
        return run

    def c_square(y):
        def run():
            exact = float(ai(y)) ** 2
            return _report(f"Airy square contour y={y:g}", airy_square_contour(y), exact, 1e-8)
        return run

    def c_laplace(r):
        def run():
            exact = math.exp(r ** 3 / 3.0)
            return _report(f"laplace r={r:g}", laplace_transform_ai(r), exact, 1e-8 * exact)
        return run

    def c_hs_norm():
        r = 1.2
        exact = math.exp(2 * r ** 3 / 3 - 4 * c * r) / (8 * math.sqrt(2 * math.pi) * r ** 1.5)
        return _report("Hilbert-Schmidt norm r=1.2 c=1", hs_norm_squared(r, c), exact, 1e-8 * exact)

    def c_trace(L):
        def run():
            cc = 1.5
            measured, expected = trace_residual(cc, L)
            tol = max(1e-4, math.exp(-4.0 * L ** 3 / 3.0))
            return _report(f"trace estimate c=1.5 L={L:g}", measured, expected, tol)
        return run

    def c_leading(n, L):
        def run():
            cc = 1.5
            expected = -2.0 * (n + 1) ** (-2.0 / 3.0) * L * float(
                ai_prime(2.0 * (n + 1) ** (2.0 / 3.0) * cc))
            tol = max(1e-4, beta_bound(cc) ** (n + 1) * math.exp(-4.0 * L ** 3 / 3.0))
            return _report(f"leading trace n={n} c=1.5 L={L:g}",
                           leading_trace_term(n, cc, L), expected, tol)
        return run

    fast = [
        ("B-hat power n=2", c_power(2)),
        ("heat-reflected B-hat power n=2 L=1", c_heat_power),
        ("Airy square contour y=0", c_square(0.0)),
        ("laplace r=1", c_laplace(1.0)),
        ("squared Airy moment L=1", c_moment(1.0)),
    ]
    if level == "fast":
        return fast
    return fast + [
        ("B-hat power n=3", c_power(3)),
        ("B-hat power inverse heat n=2 L=1", c_power_invheat(2)),
        ("B-hat power inverse heat n=3 L=1", c_power_invheat(3)),
        ("squared Airy moment L=2", c_moment(2.0)),
        ("Airy square contour y=1", c_square(1.0)),
        ("laplace r=0.5", c_laplace(0.5)),
        ("laplace r=2", c_laplace(2.0)),
        ("Hilbert-Schmidt norm r=1.2 c=1", c_hs_norm),
        ("trace estimate c=1.5 L=1", c_trace(1.0)),
        ("trace estimate c=1.5 L=1.5", c_trace(1.5)),
        ("leading trace n=1 c=1.5 L=1", c_leading(1, 1.0)),
        ("leading trace n=2 c=1.5 L=1", c_leading(2, 1.0)),
        ("leading trace n=1 c=1.5 L=1.5", c_leading(1, 1.5)),
        ("leading trace n=2 c=1.5 L=1.5", c_leading(2, 1.5)),
    ]


def run_identity_suite(level: str = "fast"):
    """Run the identity checks; returns reports sorted by name.

    ``level='fast'`` runs a five-check subset, ``'full'`` everything.
    """
    if level not in ("fast", "full"):
        raise ValueError("level must be 'fast' or 'full'")
    out = []
    for name, fn in _checks(level):
        try:
            out.append(fn())
        except Exception as exc:  # a failing check must not abort the suite
            out.append(CheckReport(f"{name} [error: {exc}]", math.nan, math.nan,
                                   math.inf, 0.0, False))
    return sorted(out, key=lambda r: r.name)


def report_csv(reports):
    """CSV text ``name,measured,expected,abs_err,tol,pass``."""
    lines = ["name,measured,expected,abs_err,tol,pass"]
    for r in reports:
        lines.append(f"{r.name},{r.measured:.15g},{r.expected:.15g},{r.abs_err:.15g},"
                     f"{r.tol:.15g},{int(r.passed)}")
    return "\n".join(lines) + "\n"
