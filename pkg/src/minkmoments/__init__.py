"""Moments of Minkowski's question-mark measure.

The moments m_n = int_0^1 x^n d?(x) are computed to arbitrary precision as the
fixed point of a linear operator, checked against exact Riemann-sum
enclosures, and used for the entire function z -> m_z, negative moments,
asymptotic constants and Stern-sequence geometric means.
"""

__version__ = "0.1.0"

from .analytic import (
    ConjectureResiduals,
    EntireMomentEvaluator,
    TaylorAtZero,
    conjecture_residuals,
    moment_entire,
    taylor_at_zero,
)
from .asymptotics import (
    AsymptoticModel,
    S_integral,
    S_shifted,
    error_series,
    fit_improved_model,
    kappa,
    lambda_const,
    rho_const,
)
from .engine import (
    EngineConfig,
    MomentVector,
    PhiVector,
    apply_T,
    bootstrap_with_asymptotics,
    compute_moments,
    fixed_point_moments,
    jh_crosscheck,
    load_checkpoint,
    save_checkpoint,
)
from .errors import (
    CancellationWarning,
    CheckpointError,
    MinkMomentsError,
    NonConvergenceError,
    PrecisionError,
    RankDeficiencyError,
    ResourceLimitError,
)
from .negative import (
    TriangularMatrixPair,
    asymptotic_negative,
    identity_suite,
    m_negative,
    m_positive_from_negative,
    matrix_pair,
)
from .special import PrecisionContext, gamma_int, gamma_poly, polylog_half
from .stern import (
    DyadicRational,
    MomentBracket,
    box_dyadic,
    box_refine,
    moment_oracle,
    question_mark,
    stern,
    stern_block,
)
from .stern_means import alpha_const, beta_estimate, block_log_mean

__all__ = [name for name in dir() if not name.startswith("_")]
