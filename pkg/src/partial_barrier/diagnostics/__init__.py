from .checks import (RateReport, aggregate_noise_floor, bt_norm_bound,
                     contraction_check, descent_check, finite_diff_gradient,
                     inner_product_bound_check, relaxed_theta_norm_bound,
                     strong_convexity_gap, theta_norm_bound)
from .suite import (CHECK_HEADER, CheckFailure, CheckResult,
                    IterationCheckRow, VerificationReport, VerificationSuite,
                    pre_convergence)

__all__ = [
    'RateReport',
    'aggregate_noise_floor',
    'bt_norm_bound',
    'contraction_check',
    'descent_check',
    'finite_diff_gradient',
    'inner_product_bound_check',
    'relaxed_theta_norm_bound',
    'strong_convexity_gap',
    'theta_norm_bound',
    'CHECK_HEADER',
    'CheckFailure',
    'CheckResult',
    'IterationCheckRow',
    'VerificationReport',
    'VerificationSuite',
    'pre_convergence',
]
