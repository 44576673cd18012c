import math
import warnings

import pytest

from airy1_persistence.errors import ConfigurationError
from airy1_persistence.exponent import kappa_tilde
from airy1_persistence.operators import KernelParams
from airy1_persistence.persistence import (
    L_MAX_FEASIBLE,
    CurvePoint,
    FitResult,
    default_L_grid,
    fit_exponent,
    fit_window,
    goe_cdf,
    persistence_curve,
    persistence_prob,
    thread_count,
)


def _line(slope, intercept, Ls):
    return [CurvePoint(L, math.exp(slope * L + intercept), slope * L + intercept, 0.0) for L in Ls]


def test_default_grid_is_the_figure_grid():
    g = default_L_grid()
    assert len(g) == 40
    assert g == [round(0.05 * n, 12) for n in range(1, 41)]
    with pytest.raises(ConfigurationError):
        default_L_grid(0.01, 0.05)


def test_fit_recovers_exact_line():
    fit = fit_exponent(_line(-0.3, 0.1, default_L_grid()))
    assert isinstance(fit, FitResult)
    assert abs(fit.slope + 0.3) < 1e-12
    assert abs(fit.intercept - 0.1) < 1e-12
    assert fit.residual_rms < 1e-12
    assert fit.kappa_hat == pytest.approx(0.3, abs=1e-12)
    assert fit.points_used == 40


def test_fit_burn_in_and_exclusions():
    pts = _line(-1.0, 0.0, [0.1 * k for k in range(1, 11)])
    assert fit_exponent(pts, burn_in=4).points_used == 6
    bad = list(pts)
    bad[2] = CurvePoint(0.3, math.nan, math.nan, math.inf, error="boom")
    bad[5] = CurvePoint(0.6, -1e-3, math.log(1e-300), 1e-3)
    bad[7] = CurvePoint(0.8, 1e-6, math.log(1e-6), 1e-5)
    with pytest.warns(UserWarning, match="excluded 3"):
        fit = fit_exponent(bad)
    assert fit.points_used == 7
    assert abs(fit.slope + 1) < 1e-12


def test_fit_rejects_degenerate_input():
    with pytest.raises(ConfigurationError):
        fit_exponent(_line(-1, 0, [0.1, 0.2]))
    with pytest.raises(ConfigurationError):
        fit_exponent(_line(-1, 0, [0.1, 0.2, 0.3]), burn_in=1)
    same = [CurvePoint(0.5, 0.5, math.log(0.5), 0.0)] * 4
    with pytest.raises(ConfigurationError):
        fit_exponent(same)


@pytest.mark.parametrize("L", [0.0, -0.5, 3.01, 10.0])
def test_persistence_prob_feasibility_window(L):
    with pytest.raises(ConfigurationError, match="feasible"):
        persistence_prob(1.0, L)


def test_persistence_prob_route_validation():
    with pytest.raises(ConfigurationError):
        persistence_prob(1.0, 0.5, route="C")
    assert L_MAX_FEASIBLE == 3.0


def test_curve_validation():
    with pytest.raises(ConfigurationError):
        persistence_curve(1.0, [])
    with pytest.raises(ConfigurationError):
        persistence_curve(1.0, [0.2, 0.1])
    with pytest.raises(ConfigurationError):
        persistence_curve(1.0, [0.1, 0.1])
    with pytest.raises(ConfigurationError):
        persistence_curve(1.0, [0.5, 4.0])


def test_curve_records_failures_and_continues():
    params = KernelParams(0.0, 0.5, d_minus=150.0, nodes_per_panel=20)
    curve = persistence_curve(0.0, [0.5, 3.0], params=params, threads=1, refine=False)
    assert curve[0].ok
    assert not curve[1].ok and "d_minus" in curve[1].error
    assert math.isnan(curve[1].prob)


def test_curve_is_independent_of_thread_count():
    Ls = [0.1, 0.2, 0.3, 0.4]
    a = persistence_curve(0.5, Ls, threads=1)
    b = persistence_curve(0.5, Ls, threads=3)
    assert a == b


def test_thread_count_sources(monkeypatch):
    monkeypatch.setenv("AIRY1_THREADS", "3")
    assert thread_count() == 3
    assert thread_count(2) == 2
    monkeypatch.delenv("AIRY1_THREADS")
    assert thread_count() >= 1


def test_probability_and_log_consistent():
    p = persistence_prob(1.0, 0.5)
    assert p.prob == pytest.approx(0.926646041523, abs=1e-10)
    assert p.log_prob == pytest.approx(math.log(p.prob), rel=1e-15)
    assert 0 < p.err_est < 1e-12


def test_routes_agree():
    a = persistence_prob(1.0, 1.0, route="A").prob
    b = persistence_prob(1.0, 1.0, route="B").prob
    assert abs(a - b) < 1e-10


def test_goe_cdf_reference_values():
    # Tracy-Widom GOE F1(2s) at s = 0 and s = 1.
    assert goe_cdf(0.0) == pytest.approx(0.831908066, abs=1e-8)
    assert goe_cdf(1.0) == pytest.approx(0.989597571, abs=1e-8)
    assert goe_cdf(0.0, nodes_per_panel=120) == pytest.approx(goe_cdf(0.0), abs=1e-13)


def test_fit_window():
    assert fit_window(1.0) == default_L_grid()
    w = fit_window(-2.0)
    assert w[0] == 0.05 and max(w) <= 22 / kappa_tilde(-2.0).value + 1e-12
    assert len(fit_window(-3.5)) >= 10


@pytest.mark.parametrize("c", [0.0, 1.0])
def test_small_horizon_approaches_goe_limit_at_sqrt_rate(c):
    # P(c, 0) - P(c, L) = A sqrt(L) + B L + ..., with A = 2 rho(c) / sqrt(pi)
    # and rho the GOE density in c.  One Richardson step in sqrt(L) isolates A.
    h = 1e-4
    rho = (goe_cdf(c + h) - goe_cdf(c - h)) / (2 * h)
    g = {L: (goe_cdf(c) - persistence_prob(c, L).prob) / math.sqrt(L) for L in (0.003125, 0.0125)}
    A = 2 * g[0.003125] - g[0.0125]
    assert A == pytest.approx(2 * rho / math.sqrt(math.pi), rel=1e-2)


def test_monotone_decay_in_horizon(curves):
    curve = curves.get(1.0)
    probs = [p.prob for p in curve if abs(round(p.L / 0.2) * 0.2 - p.L) < 1e-9]
    assert len(probs) == 10
    assert all(b < a for a, b in zip(probs[:-1], probs[1:]))


def test_higher_threshold_persists_longer(curves):
    lo, hi = curves.get(1.0), curves.get(1.5)
    assert all(b.prob > a.prob for a, b in zip(lo, hi))


def test_curve_is_nearly_straight(curves):
    curve = curves.get(1.0)
    fit = fit_exponent(curve)
    resid = [p.log_prob - (fit.slope * p.L + fit.intercept) for p in curve]
    assert max(abs(r) for r in resid) <= 0.01


def test_fit_stable_under_burn_in(curves):
    curve = curves.get(1.0)
    assert abs(fit_exponent(curve).kappa_hat - fit_exponent(curve, burn_in=5).kappa_hat) <= 0.003


def test_fitted_exponent_decreases_with_threshold(curves):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        ks = [fit_exponent(curves.get(c)).kappa_hat for c in (-1.0, 0.0, 1.0)]
    assert ks[0] > ks[1] > ks[2]
