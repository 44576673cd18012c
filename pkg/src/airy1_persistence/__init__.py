"""Persistence probabilities and exponents of the Airy1 process."""

__version__ = "0.1.0"

from .errors import (
    Airy1Error,
    ConfigurationError,
    KernelOverflow,
    NonConvergence,
    NonFinite,
    NonReal,
    PoleProximity,
)
from .special_functions import AiryValue, ai, ai_prime, ai_scaled, ai_prime_scaled, airy_ai, airy_ai_prime
from .quadrature import PanelRule, QuadratureRule, gauss_legendre, integrate_adaptive, map_rule, panel_rule
from .operators import (
    DiscretizedOperator,
    Grid,
    KernelParams,
    assemble_K_route_B,
    assemble_M_route_A,
    discretize,
    project,
)
from .fredholm import DetResult, det_one_minus, fredholm_det, log_det_series, trace, trace_power
from .exponent import (
    ContinuationSpec,
    ExponentResult,
    f_of_x,
    jump_point,
    kappa,
    kappa_tilde,
    kappa_tilde_prime,
    residue_checks,
)
from .persistence import (
    CurvePoint,
    FitResult,
    fit_exponent,
    goe_cdf,
    persistence_curve,
    persistence_prob,
)
from .identities import CheckReport, run_identity_suite

__all__ = [name for name in dir() if not name.startswith("_")]
