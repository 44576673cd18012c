import itertools
import math

import numpy as np
import pytest

from airy1_persistence.errors import ConfigurationError, NonFinite
from airy1_persistence.fredholm import (
    DetResult,
    det_one_minus,
    fredholm_det,
    log_det_series,
    trace,
    trace_power,
)
from airy1_persistence.operators import (
    DiscretizedOperator,
    KernelParams,
    assemble_K_route_B,
    assemble_M_route_A,
    discretize,
    kernel_b0c,
    make_grid,
)
from airy1_persistence.persistence import goe_cdf


def test_zero_operator_has_unit_determinant():
    g = make_grid(-1, 1, (0.0,), 8, 1)
    r = det_one_minus(discretize(lambda a, b: 0.0 * a, g))
    assert r.value == 1.0
    assert r.err_est == 0.0 and r.nodes_used == 16


def test_rank_one_determinant():
    g = make_grid(-8, 8, (0.0,), 40, 2)
    phi = lambda x: 0.5 * np.exp(-x * x)
    r = det_one_minus(discretize(lambda a, b: phi(a) * phi(b), g))
    assert abs(r.value - (1 - 0.25 * math.sqrt(math.pi / 2))) < 1e-10


def test_negative_determinant_keeps_sign():
    g = make_grid(-8, 8, (0.0,), 40, 2)
    phi = lambda x: np.exp(-x * x)
    r = det_one_minus(discretize(lambda a, b: phi(a) * phi(b), g))
    assert r.sign == -1.0
    assert abs(r.value - (1 - math.sqrt(math.pi / 2))) < 1e-10


def _half_line_goe(nodes, s=0.0):
    g = make_grid(0.0, 16.0, (), nodes, 2)
    return det_one_minus(discretize(lambda a, b: kernel_b0c(a, b, s), g)).value


def test_goe_determinant_self_convergence_and_independent_code():
    base = _half_line_goe(40)
    fine = _half_line_goe(160)
    assert abs(base - fine) < 1e-6
    assert abs(base - goe_cdf(0.0)) < 1e-10
    # Tracy-Widom GOE distribution at the origin.
    assert abs(base - 0.831908066) < 1e-8


def test_permutation_invariance():
    p = KernelParams(1.0, 1.0, nodes_per_panel=30)
    m = assemble_K_route_B(p).matrix
    perm = np.random.default_rng(7).permutation(m.shape[0])
    a = det_one_minus(m).value
    b = det_one_minus(m[np.ix_(perm, perm)]).value
    assert abs(a - b) < 1e-13


def test_trace_series_matches_log_determinant():
    K = assemble_K_route_B(KernelParams(1.5, 1.0))
    assert np.max(np.abs(np.linalg.eigvals(K.matrix))) < 1
    assert abs(log_det_series(K, 12) - math.log(det_one_minus(K).value)) < 1e-6


def test_trace_power_matches_dense_power():
    rng = np.random.default_rng(3)
    m = rng.normal(size=(12, 12)) / 12
    assert trace(m) == pytest.approx(np.trace(m))
    for n in (1, 2, 5, 16):
        assert trace_power(m, n) == pytest.approx(np.trace(np.linalg.matrix_power(m, n)), rel=1e-12, abs=1e-300)


@pytest.mark.parametrize("n", [0, 17, 2.5])
def test_trace_power_range(n):
    with pytest.raises(ConfigurationError):
        trace_power(np.eye(3), n)


def test_trace_of_delta_like_kernel_counts_nodes():
    # The weight embedding of K(x_i, x_j) = 1/w_i on the diagonal is the identity.
    g = make_grid(-1, 1, (0.0,), 7, 1)
    op = DiscretizedOperator(g, np.eye(len(g)))
    assert trace(op) == len(g)


def test_non_finite_matrices_are_rejected():
    m = np.zeros((4, 4))
    m[1, 2] = np.nan
    with pytest.raises(NonFinite):
        det_one_minus(m)
    m[1, 2] = np.inf
    with pytest.raises(NonFinite):
        det_one_minus(m)


def test_singular_matrix_gives_zero():
    assert det_one_minus(np.eye(3)).value == 0.0


def test_balancing_matters_for_negative_thresholds():
    # Rows of exp(-L Delta) B grow fast below zero; unbalanced LU loses digits.
    p = KernelParams(-1.0, 2.0)
    reference = det_one_minus(assemble_M_route_A(p)).value
    balanced = det_one_minus(assemble_K_route_B(p)).value
    assert abs(balanced - reference) < 1e-10


def test_refinement_estimate_bounds_the_true_error():
    hits = 0
    cases = list(itertools.product([0.5, 1.0, 1.5], [0.2, 1.0, 2.0]))
    for c, L in cases:
        p = KernelParams(c, L, nodes_per_panel=20)
        r = fredholm_det(assemble_K_route_B, p)
        assert isinstance(r, DetResult) and r.err_est >= 0
        assert -0.1 <= r.value <= 1.1
        truth = det_one_minus(assemble_K_route_B(p.refined(4))).value
        hits += abs(r.value - truth) <= r.err_est
    assert hits >= 0.9 * len(cases)


def test_fredholm_det_without_refinement():
    p = KernelParams(1.0, 0.5, nodes_per_panel=30)
    r = fredholm_det(assemble_K_route_B, p, refine=False)
    assert r.err_est == 0.0
    assert r.value == det_one_minus(assemble_K_route_B(p)).value
