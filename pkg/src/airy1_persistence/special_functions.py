"""Real Airy function Ai and its derivative.

Three regimes are used:

* ``x > 12``: the monotone asymptotic expansion in ``zeta = (2/3) x**1.5``.
* ``x < -9``: the oscillatory asymptotic expansion.
* ``-9 <= x <= 12``: a table of Taylor expansions around anchors spaced
  0.5 apart.  Ai satisfies ``Ai'' = x Ai``, so the Taylor coefficients at
  every anchor follow from ``(Ai(x0), Ai'(x0))`` by a three-term recurrence.
  The anchor values are produced once at import by marching a Taylor step
  at a time: leftwards from the asymptotic values at ``x = 12`` (stable,
  since Ai grows in that direction) and leftwards from the Maclaurin
  values at ``x = 0``.

For ``x > 0`` the scaled variants ``Ai(x) exp(zeta)`` and
``Ai'(x) exp(zeta)`` are available and never underflow.
"""

from __future__ import annotations

from dataclasses import dataclass
import math

import numpy as np

__all__ = [
    "AiryValue",
    "airy_ai",
    "airy_ai_prime",
    "ai",
    "ai_prime",
    "ai_scaled",
    "ai_prime_scaled",
    "AI0",
    "AIP0",
]

AI0 = 3.0 ** (-2.0 / 3.0) / math.gamma(2.0 / 3.0)
AIP0 = -(3.0 ** (-1.0 / 3.0)) / math.gamma(1.0 / 3.0)

_EPS = np.finfo(float).eps
_SQRT_PI = math.sqrt(math.pi)

_X_LEFT = -9.0
_X_RIGHT = 12.0
_SPACING = 0.5
_NTERMS = 34
_NASYMP = 24


def _asymptotic_coefficients(count):
    u = np.empty(count)
    v = np.empty(count)
    u[0] = v[0] = 1.0
    for k in range(1, count):
        u[k] = u[k - 1] * (6 * k - 5) * (6 * k - 3) * (6 * k - 1) / ((2 * k - 1) * 216 * k)
        v[k] = -(6 * k + 1) / (6 * k - 1) * u[k]
    return u, v


_U, _V = _asymptotic_coefficients(_NASYMP)
_SIGNS = (-1.0) ** np.arange(_NASYMP)


def _taylor_coefficients(x0, a0, a1, nterms=_NTERMS):
    a = np.zeros(nterms)
    a[0], a[1] = a0, a1
    a[2] = x0 * a0 / 2.0
    for k in range(1, nterms - 2):
        a[k + 2] = (x0 * a[k] + a[k - 1]) / ((k + 2) * (k + 1))
    return a


def _taylor_step(coef, h):
    powers = h ** np.arange(len(coef))
    value = np.dot(coef, powers)
    deriv = np.dot(coef[1:] * np.arange(1, len(coef)), powers[:-1])
    return value, deriv


def _asymptotic_positive(x):
    """Scaled ``Ai`` and ``Ai'`` for large positive ``x`` (arrays)."""
    zeta = (2.0 / 3.0) * x ** 1.5
    inv = 1.0 / zeta[..., None] ** np.arange(_NASYMP)
    su = (inv * (_SIGNS * _U)).sum(axis=-1)
    sv = (inv * (_SIGNS * _V)).sum(axis=-1)
    q = x ** 0.25
    return su / (2.0 * _SQRT_PI * q), -q * sv / (2.0 * _SQRT_PI)


def _asymptotic_negative(x):
    """``Ai`` and ``Ai'`` for large negative ``x`` (arrays)."""
    t = -x
    zeta = (2.0 / 3.0) * t ** 1.5
    inv = 1.0 / zeta[..., None] ** np.arange(_NASYMP)
    k = np.arange(_NASYMP) // 2
    alt = (-1.0) ** k
    even = np.arange(_NASYMP) % 2 == 0
    ue = (inv * np.where(even, alt * _U, 0.0)).sum(axis=-1)
    uo = (inv * np.where(~even, alt * _U, 0.0)).sum(axis=-1)
    ve = (inv * np.where(even, alt * _V, 0.0)).sum(axis=-1)
    vo = (inv * np.where(~even, alt * _V, 0.0)).sum(axis=-1)
    phase = zeta - math.pi / 4.0
    cs, sn = np.cos(phase), np.sin(phase)
    q = t ** 0.25
    value = (cs * ue + sn * uo) / (_SQRT_PI * q)
    deriv = q * (sn * ve - cs * vo) / _SQRT_PI
    return value, deriv


def _build_table():
    anchors = np.arange(_X_LEFT, _X_RIGHT + _SPACING / 2, _SPACING)
    coef = np.zeros((len(anchors), _NTERMS))
    i0 = int(round(-_X_LEFT / _SPACING))

    a_r, ap_r = _asymptotic_positive(np.array([_X_RIGHT]))
    damp = math.exp(-(2.0 / 3.0) * _X_RIGHT ** 1.5)
    value, deriv = a_r[0] * damp, ap_r[0] * damp
    for i in range(len(anchors) - 1, i0 - 1, -1):
        coef[i] = _taylor_coefficients(anchors[i], value, deriv)
        value, deriv = _taylor_step(coef[i], -_SPACING)

    # The anchor at zero takes the exact Maclaurin values.
    value, deriv = AI0, AIP0
    for i in range(i0, -1, -1):
        coef[i] = _taylor_coefficients(anchors[i], value, deriv)
        value, deriv = _taylor_step(coef[i], -_SPACING)
    return anchors, coef


_ANCHORS, _COEF = _build_table()
_DCOEF = _COEF[:, 1:] * np.arange(1, _NTERMS)


def _horner(coef, h):
    out = np.zeros_like(h)
    for j in range(coef.shape[1] - 1, -1, -1):
        out = out * h + coef[:, j]
    return out


def _evaluate(x, derivative):
    """Return ``(scaled, zeta)`` where ``value = scaled * exp(-zeta)``."""
    x = np.asarray(x, dtype=float)
    shape = x.shape
    x = x.ravel()
    if not np.all(np.isfinite(x)):
        raise ValueError("Airy argument must be finite")
    out = np.empty_like(x)
    zeta = np.where(x > 0, (2.0 / 3.0) * np.abs(x) ** 1.5, 0.0)

    mid = (x >= _X_LEFT) & (x <= _X_RIGHT)
    if mid.any():
        xm = x[mid]
        idx = np.clip(np.rint((xm - _X_LEFT) / _SPACING).astype(int), 0, len(_ANCHORS) - 1)
        h = xm - _ANCHORS[idx]
        table = _DCOEF if derivative else _COEF
        vals = _horner(table[idx], h)
        out[mid] = vals * np.exp(zeta[mid])
    right = x > _X_RIGHT
    if right.any():
        a, ap = _asymptotic_positive(x[right])
        out[right] = ap if derivative else a
    left = x < _X_LEFT
    if left.any():
        a, ap = _asymptotic_negative(x[left])
        out[left] = ap if derivative else a
    return out.reshape(shape), zeta.reshape(shape)


def ai_scaled(x):
    """``Ai(x) exp((2/3) x**1.5)`` for ``x > 0`` and ``Ai(x)`` otherwise."""
    return _evaluate(x, False)[0]


def ai_prime_scaled(x):
    """``Ai'(x) exp((2/3) x**1.5)`` for ``x > 0`` and ``Ai'(x)`` otherwise."""
    return _evaluate(x, True)[0]


def ai(x):
    """Vectorized ``Ai(x)``."""
    s, z = _evaluate(x, False)
    return s * np.exp(-z)


def ai_prime(x):
    """Vectorized ``Ai'(x)``."""
    s, z = _evaluate(x, True)
    return s * np.exp(-z)


@dataclass(frozen=True)
class AiryValue:
    """Airy function value with its exponentially scaled form.

    Attributes
    ----------
    value : float
        The function value.
    scaled : float
        ``value * exp((2/3) x**1.5)`` for ``x > 0``, else ``value``.
    abs_err_est : float
        Estimated absolute error of ``value``.
    """

    value: float
    scaled: float
    abs_err_est: float


def _err_estimate(x, scaled, zeta):
    x = float(x)
    if x < 0:
        # Oscillatory: error relative to the local envelope plus phase error.
        amp = abs(x) ** 0.25 / _SQRT_PI if x < -1 else 1.0
        zl = (2.0 / 3.0) * abs(x) ** 1.5
        return 8 * _EPS * amp * (1.0 + zl) + 4 * _EPS * abs(scaled)
    return 8 * _EPS * abs(scaled) * math.exp(-zeta)


def _scalar(x, derivative):
    if not math.isfinite(x):
        raise ValueError("Airy argument must be finite")
    s, z = _evaluate(np.array([x], dtype=float), derivative)
    s, z = float(s[0]), float(z[0])
    return AiryValue(value=s * math.exp(-z), scaled=s, abs_err_est=_err_estimate(x, s, z))


def airy_ai(x: float) -> AiryValue:
    """Evaluate ``Ai(x)``.

    Examples
    --------
    >>> round(airy_ai(0.0).value, 15)
    0.355028053887817
    """
    return _scalar(float(x), False)


def airy_ai_prime(x: float) -> AiryValue:
    """Evaluate ``Ai'(x)``."""
    return _scalar(float(x), True)
