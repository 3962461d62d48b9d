"""Certified numerics for averages of twisted special values over weight-2 newforms of level N,
computed from the geometric side of the Petersson formula."""

from __future__ import annotations

__version__ = "0.1.0"

from .arith import divisor_count, euler_phi, factorize, mod_inverse
from .bounds import (
    BoundCertificate,
    ErrorTermReport,
    error_terms,
    f_delta_scan,
    proposition_bounds,
    scan_levels,
    verify_theorem,
)
from .characters import DirichletCharacter, character, conductor, enumerate_characters, principal_character
from .kloosterman import kloosterman_sum, twisted_sum_bounds, twisted_sum_closed, twisted_sum_direct, weil_bound
from .petersson import (
    AveragingParams,
    SumWithTail,
    TheoremHypothesisError,
    TruncationPolicy,
    approx_average,
    b_functional_bound,
    inner_product,
    inner_product_bound,
    main_term,
)
from .special import Enclosure, bessel_j1, bessel_j1_oracle, one_minus_exp_ratio, zeta_enclosure

__all__ = [
    "AveragingParams", "BoundCertificate", "DirichletCharacter", "Enclosure", "ErrorTermReport",
    "SumWithTail", "TheoremHypothesisError", "TruncationPolicy", "approx_average", "b_functional_bound",
    "bessel_j1", "bessel_j1_oracle", "character", "conductor", "divisor_count", "enumerate_characters",
    "error_terms", "euler_phi", "f_delta_scan", "factorize", "inner_product", "inner_product_bound",
    "kloosterman_sum", "main_term", "mod_inverse", "one_minus_exp_ratio", "principal_character",
    "proposition_bounds", "scan_levels", "twisted_sum_bounds", "twisted_sum_closed", "twisted_sum_direct",
    "verify_theorem", "weil_bound", "zeta_enclosure",
]
