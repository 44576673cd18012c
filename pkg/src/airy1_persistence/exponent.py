"""Persistence exponent: series, contour integrand and analytic continuation.

For ``c > 0`` the exponent is the series

    kappa(c) = -2 sum_{n>=1} n^{-5/3} Ai'(2 n^{2/3} c).

Its derivative has the contour representation

    f(x) = -(2 / (pi i)) int_Gamma w^2 e^phi / (1 - e^phi) dw,
    phi = w^3/3 - 2 w x,

with ``Gamma`` the two rays ``arg w = +-pi/3`` oriented upwards.  On
``Gamma`` one has ``w^3 = -r^3``, so the integrand decays like
``exp(-r^3/3)``.  As ``x`` decreases through ``0`` and through the jump
points ``c(n) = -(2 n pi / 3)^{2/3}`` poles of the integrand cross the
contour; ``f`` jumps by ``6`` and ``48/7`` there.  Subtracting the jumps
gives the analytic continuation ``kappa_tilde'`` and, integrated,
``kappa_tilde``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
import cmath
import math

import numpy as np

from .errors import ConfigurationError, NonReal, PoleProximity
from .quadrature import integrate_adaptive
from .special_functions import AIP0, ai, ai_prime

__all__ = [
    "ContinuationSpec",
    "ExponentResult",
    "RESIDUE_ORIGIN",
    "RESIDUE_PAIR",
    "zeta_five_thirds",
    "kappa",
    "kappa_prime_series",
    "jump_point",
    "jump_zero",
    "jump_points_between",
    "active_jumps",
    "f_of_x",
    "q_integrand",
    "residue_checks",
    "kappa_tilde",
    "kappa_tilde_prime",
]

RESIDUE_ORIGIN = 6.0
RESIDUE_PAIR = 48.0 / 7.0

_ROT = cmath.exp(1j * math.pi / 3.0)


@dataclass(frozen=True)
class ContinuationSpec:
    """Contour and pole-guard controls.

    Attributes
    ----------
    r_max : float
        Minimum radial truncation of each ray; enlarged automatically for
        negative ``x`` where the integrand first grows like ``exp(|x| r)``.
    nodes_per_unit : int
        Gauss-Legendre order on the initial unit-length contour panels.
    delta : float
        Pole guard: minimum distance from ``0`` and from every ``c(n)``.
    tol : float
        Absolute tolerance of contour and real-line integrals.
    """

    r_max: float = 8.0
    nodes_per_unit: int = 16
    delta: float = 1e-3
    tol: float = 1e-10

    def __post_init__(self):
        if self.r_max < 6:
            raise ConfigurationError("r_max must be at least 6")
        if not self.delta > 0:
            raise ConfigurationError("delta must be positive")
        if not self.tol > 0 or int(self.nodes_per_unit) < 2:
            raise ConfigurationError("tol must be positive and nodes_per_unit >= 2")


@dataclass(frozen=True)
class ExponentResult:
    """A computed exponent quantity.

    ``branch_correction`` holds the residue terms that were added, zero
    on the ``c >= 0`` branch.
    """

    value: float
    err_est: float
    terms_or_nodes: int
    branch_correction: float = 0.0


# -------------------------------------------------------------- series


@lru_cache(maxsize=1)
def zeta_five_thirds(n_terms: int = 10**6) -> float:
    """``zeta(5/3)`` by direct summation plus an Euler-Maclaurin tail."""
    s = 5.0 / 3.0
    n = np.arange(n_terms, 0, -1, dtype=float)
    head = math.fsum(n ** -s)
    N = float(n_terms)
    tail = (N ** (1 - s) / (s - 1) - 0.5 * N ** -s + s / 12.0 * N ** (-s - 1)
            - s * (s + 1) * (s + 2) / 720.0 * N ** (-s - 3))
    return head + tail


def _series(c, tol, power, use_derivative):
    """Sum ``n^{-power} F(2 n^{2/3} c)`` in chunks until terms are below tol."""
    total = 0.0
    start = 1
    chunk = 256
    count = 0
    while True:
        n = np.arange(start, start + chunk, dtype=float)
        arg = 2.0 * n ** (2.0 / 3.0) * c
        vals = ai_prime(arg) if use_derivative else ai(arg)
        terms = n ** -power * vals
        partial = math.fsum(terms)
        total += partial
        count += chunk
        last = abs(terms[-1])
        if last < tol * max(1.0, abs(total)):
            # Terms decrease geometrically beyond this point; bound the tail
            # by the last term times the reciprocal ratio gap.
            ratio = abs(terms[-1] / terms[-2]) if terms[-2] != 0 else 0.0
            tail = last * ratio / max(1e-300, 1.0 - ratio) if ratio < 1 else last * count
            return total, tail, count
        start += chunk
        chunk = min(chunk * 2, 1 << 17)


def kappa(c: float, tol: float = 1e-15) -> ExponentResult:
    """Series ``kappa(c) = -2 sum n^{-5/3} Ai'(2 n^{2/3} c)`` for ``c >= 0``.

    Examples
    --------
    >>> round(kappa(1.0).value, 3)
    0.112
    """
    c = float(c)
    if c < 0:
        raise ConfigurationError("kappa needs c >= 0; use kappa_tilde for c < 0")
    if c == 0:
        z = zeta_five_thirds()
        return ExponentResult(-2.0 * AIP0 * z, 1e-15, 10**6)
    total, tail, count = _series(c, tol, 5.0 / 3.0, True)
    return ExponentResult(float(-2.0 * total), float(2.0 * tail + 1e-16 * abs(total)), count)


def kappa_prime_series(c: float, tol: float = 1e-15) -> ExponentResult:
    """``kappa'(c) = -8 c sum n^{-1/3} Ai(2 n^{2/3} c)`` for ``c > 0``.

    Uses ``Ai'' = x Ai`` on the termwise derivative of the series.
    """
    c = float(c)
    if c <= 0:
        raise ConfigurationError("kappa_prime_series needs c > 0")
    total, tail, count = _series(c, tol, 1.0 / 3.0, False)
    return ExponentResult(float(-8.0 * c * total), float(8.0 * c * tail), count)


# ---------------------------------------------------------- jump points


def jump_point(n: int) -> float:
    """``c(n) = -(2 n pi / 3)^{2/3}``."""
    if int(n) != n or n < 1:
        raise ConfigurationError("jump_point needs an integer n >= 1")
    return -((2.0 * n * math.pi / 3.0) ** (2.0 / 3.0))


def jump_zero(n: int) -> complex:
    """Zero ``w(n) = sqrt(3) (2 pi n / 3)^{1/3} e^{i pi/3}`` on the upper ray."""
    if int(n) != n or n < 1:
        raise ConfigurationError("jump_zero needs an integer n >= 1")
    return math.sqrt(3.0) * (2.0 * math.pi * n / 3.0) ** (1.0 / 3.0) * _ROT


def active_jumps(c: float) -> int:
    """Number of ``n >= 1`` with ``c < c(n)``."""
    if c >= jump_point(1):
        return 0
    # c < c(n)  <=>  n < (3/(2 pi)) |c|^{3/2}
    bound = 3.0 / (2.0 * math.pi) * (-c) ** 1.5
    n = int(math.floor(bound))
    while n >= 1 and not c < jump_point(n):
        n -= 1
    while c < jump_point(n + 1):
        n += 1
    return n


def jump_points_between(lo: float, hi: float) -> list:
    """Jump points ``c(n)`` inside the open interval ``(lo, hi)``, descending."""
    out = []
    n = 1
    while True:
        p = jump_point(n)
        if p <= lo:
            return out
        if p < hi:
            out.append(p)
        n += 1


def _nearest_pole(x, include_origin=True):
    best = (abs(x), 0.0) if include_origin else (math.inf, None)
    if x < 0:
        k = max(1, active_jumps(x))
        for n in (k - 1, k, k + 1, k + 2):
            if n >= 1:
                p = jump_point(n)
                if abs(x - p) < best[0]:
                    best = (abs(x - p), p)
    return best


def _guard(x, delta):
    dist, pole = _nearest_pole(x, include_origin=False)
    if x < 0 and pole is not None and dist < delta:
        raise PoleProximity(f"x={x} is within {delta} of the jump point {pole}", x, pole)
    if -delta < x <= 0:
        raise PoleProximity(f"x={x} is within {delta} of the jump at 0", x, 0.0)


# -------------------------------------------------------------- contour


def q_integrand(w, x):
    """``Q(w, x) = -4 w^2 e^phi / (1 - e^phi)``, the residue-normalized integrand."""
    w = np.asarray(w, dtype=complex)
    phi = w ** 3 / 3.0 - 2.0 * w * x
    return -4.0 * w * w / np.expm1(-phi)


def _ray_integrand(direction, x):
    def h(r):
        w = r * direction
        phi = w ** 3 / 3.0 - 2.0 * w * x
        # w^2 e^phi/(1 - e^phi) written with e^{-phi} to stay finite.
        return w * w / np.expm1(-phi) * direction

    return h


def _ray_length(x, r_min):
    # Need r^3/3 + x r large enough that e^{-(r^3/3 + x r)} r^2 is negligible.
    r = r_min
    for _ in range(50):
        if r ** 3 / 3.0 + x * r - 2.0 * math.log(r) > 80.0:
            return r
        r += 0.5
    return r


def _ray_breakpoints(x, r_max):
    pts = set(float(k) for k in range(1, int(r_max)))
    n = 1
    while True:
        rn = abs(jump_zero(n))
        if rn >= r_max:
            break
        pts.add(rn)
        n += 1
    if x != 0:
        s = math.sqrt(abs(x))
        for k in (0.25, 0.5, 1.0, 2.0):
            if k * s < r_max:
                pts.add(k * s)
    if x > 0:
        pts.add(math.sqrt(6.0 * x) * 0.5)
    return sorted(p for p in pts if 0 < p < r_max)


def _contour(x, spec: ContinuationSpec):
    r_max = _ray_length(x, spec.r_max)
    bps = _ray_breakpoints(x, r_max)
    tol = spec.tol / 8.0
    up, e_up = integrate_adaptive(_ray_integrand(_ROT, x), 0.0, r_max, tol,
                                  breakpoints=bps, order=int(spec.nodes_per_unit))
    lo, e_lo = integrate_adaptive(_ray_integrand(_ROT.conjugate(), x), 0.0, r_max, tol,
                                  breakpoints=bps, order=int(spec.nodes_per_unit))
    # Gamma runs in along the lower ray and out along the upper ray.
    total = up - lo
    value = -(2.0 / (math.pi * 1j)) * total
    err = 2.0 / math.pi * (e_up + e_lo)
    return value, err, r_max


def f_of_x(x: float, spec: ContinuationSpec = ContinuationSpec()) -> ExponentResult:
    """Contour integral ``f(x)``; equals ``kappa'(x)`` for ``x > 0``.

    Raises
    ------
    PoleProximity
        If ``x`` lies within ``spec.delta`` of a jump point or in
        ``(-delta, 0]``.
    NonReal
        If the imaginary part of the contour integral exceeds ``spec.tol``.
    """
    x = float(x)
    _guard(x, spec.delta)
    value, err, r_max = _contour(x, spec)
    if abs(value.imag) >= max(spec.tol, 10 * err):
        raise NonReal(f"f({x}) has imaginary part {value.imag:.3g}")
    return ExponentResult(float(value.real), float(err + abs(value.imag)),
                          int(round(r_max * spec.nodes_per_unit)))


def _f_raw(x, spec):
    value, err, _ = _contour(float(x), spec)
    return value.real, err


def _one_sided_limit(point, side, spec):
    """Limit of ``f`` at ``point`` from ``side`` (+1 right, -1 left).

    Quadratic extrapolation from ``point + side*k*delta``, ``k = 1, 2, 3``;
    each one-sided branch of ``f`` is analytic up to and past the jump.
    """
    d = spec.delta
    vals = [_f_raw(point + side * k * d, spec)[0] for k in (1, 2, 3)]
    limit = 3.0 * vals[0] - 3.0 * vals[1] + vals[2]
    return limit, vals


def _strip_integral(point, side, spec):
    """``int f`` over the strip of width delta between a jump and the grid.

    The quadratic through the three one-sided samples is integrated exactly.
    """
    d = spec.delta
    f1, f2, f3 = (_f_raw(point + side * k * d, spec)[0] for k in (1, 2, 3))
    # Quadratic p(t) with p(1)=f1, p(2)=f2, p(3)=f3 integrated over t in [0, 1].
    integral = (23.0 * f1 - 16.0 * f2 + 5.0 * f3) / 12.0
    return d * integral


def residue_checks(tol: float = 1e-10, radius: float = 1e-3, nodes: int = 64):
    """Residues of ``Q`` at ``sqrt(6c)`` and at the pair ``w(n), conj(w(n))``.

    Each residue is computed twice: with the simple-pole formula
    ``g / f'`` and with the trapezoidal rule on a small circle.

    Returns
    -------
    list of dict
        Keys ``name``, ``formula``, ``contour``, ``expected``, ``passed``.
    """
    def by_formula(w0, c):
        # Q = -4 g / (1 - e^phi): residue -4 g / (-e^phi phi') = 4 w^2 / phi'.
        dphi = w0 * w0 - 2.0 * c
        return 4.0 * w0 * w0 / dphi

    def by_circle(w0, c):
        t = 2.0 * math.pi * np.arange(nodes) / nodes
        w = w0 + radius * np.exp(1j * t)
        return complex(np.mean(q_integrand(w, c) * radius * np.exp(1j * t)))

    report = []
    for c in (0.25, 1.0):
        w0 = math.sqrt(6.0 * c)
        rf, rc = by_formula(w0, c), by_circle(w0, c)
        ok = abs(rf - RESIDUE_ORIGIN) <= tol and abs(rc - RESIDUE_ORIGIN) <= tol
        report.append(dict(name=f"residue sqrt(6c) c={c}", formula=rf, contour=rc,
                           expected=RESIDUE_ORIGIN, passed=ok))
    for n in (1, 2, 3):
        c = jump_point(n)
        w0 = jump_zero(n)
        rf = by_formula(w0, c) + by_formula(w0.conjugate(), c)
        rc = by_circle(w0, c) + by_circle(w0.conjugate(), c)
        ok = abs(rf - RESIDUE_PAIR) <= tol and abs(rc - RESIDUE_PAIR) <= tol
        report.append(dict(name=f"residue pair n={n}", formula=rf, contour=rc,
                           expected=RESIDUE_PAIR, passed=ok))
    return report


# --------------------------------------------------------- continuation


def _branch_terms(c):
    if c >= 0:
        return 0.0
    total = -RESIDUE_ORIGIN * c
    n = 1
    while c < jump_point(n):
        total -= RESIDUE_PAIR * (c - jump_point(n))
        n += 1
    return total


def _check_c_guard(c, delta):
    dist, pole = _nearest_pole(c)
    if c < 0 and dist < delta:
        raise PoleProximity(f"c={c} is within {delta} of the jump point {pole}", c, pole)


def kappa_tilde(c: float, spec: ContinuationSpec = ContinuationSpec()) -> ExponentResult:
    """Analytic continuation of the exponent to all real ``c``.

    For ``c < 0``::

        kappa(0) - int_c^0 f - 6 c - (48/7) sum_n (c - c(n)) 1[c < c(n)]

    The integral is split at ``0`` and every jump point in ``(c, 0)``.
    Adaptive quadrature runs on panels stopping ``delta`` short of each
    jump; the remaining strips use one-sided quadratic extrapolation.
    """
    c = float(c)
    if c >= 0:
        return kappa(c)
    _check_c_guard(c, spec.delta)
    k0 = kappa(0.0)
    edges = [0.0] + jump_points_between(c, 0.0) + [c]
    integral = 0.0
    err = 0.0
    evaluations = 0
    d = spec.delta
    v_f = np.vectorize(lambda t: _f_raw(t, spec)[0])
    for hi, lo in zip(edges[:-1], edges[1:]):
        a = lo + d if lo != c else lo
        b = hi - d
        if b > a:
            val, e = integrate_adaptive(v_f, a, b, spec.tol, order=15)
            integral += val
            err += e
            evaluations += 1
        if lo != c:
            integral += _strip_integral(lo, +1, spec)
        integral += _strip_integral(hi, -1, spec)
        err += 2 * spec.tol
    branch = _branch_terms(c)
    value = k0.value - integral + branch
    return ExponentResult(float(value), float(err + k0.err_est), evaluations, float(branch))


def kappa_tilde_prime(c: float, spec: ContinuationSpec = ContinuationSpec()) -> ExponentResult:
    """``f(c) - 6 * 1[c < 0] - (48/7) #{n : c < c(n)}``.

    Within ``delta`` of ``0`` or of a jump point the right limit at that
    point is returned.
    """
    c = float(c)
    dist, pole = _nearest_pole(c)
    near = pole is not None and dist < spec.delta and not (pole == 0.0 and c > 0)
    if near:
        limit, _ = _one_sided_limit(pole, +1, spec)
        right = pole + spec.delta
        steps = -(RESIDUE_ORIGIN if right < 0 else 0.0) - RESIDUE_PAIR * active_jumps(right)
        return ExponentResult(float(limit + steps), 10 * spec.tol + spec.delta ** 3, 3, steps)
    r = f_of_x(c, spec)
    if c > 0:
        return ExponentResult(r.value, r.err_est, r.terms_or_nodes, 0.0)
    steps = -RESIDUE_ORIGIN - RESIDUE_PAIR * active_jumps(c)
    return ExponentResult(r.value + steps, r.err_est, r.terms_or_nodes, steps)
