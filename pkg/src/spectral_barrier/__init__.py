"""Certified lower bounds on the smallest eigenvalue of streaming Gram
matrices.

A barrier tracker absorbs sample vectors one at a time, raising a shift l
below the spectrum while keeping the potential tr(A - l I)^{-1} capped; the
final shift certifies lambda_min. Moment functionals of the sampling
ensemble feed closed-form bounds, and a seeded Monte Carlo harness compares
certificates, bounds, and exact eigensolves.
"""

from .__about__ import __version__
from .barrier import (
    BarrierState,
    CertifiedBound,
    barrier_new,
    barrier_step,
    certify_stream,
    choose_phi,
)
from .bounds import (
    BoundResult,
    CheckResult,
    KpConstants,
    MartingaleSpec,
    VerificationReport,
    cor1_bound,
    cor2_min_n,
    cor3_bound,
    lemma1_step_check,
    lemma2_delta_sample,
    lemma2_random_pair,
    lemma2_verify,
    lemma3_tail_check,
    simulate_martingale_Z,
    thm1_bound,
    thm2_Kp_bound,
    thm2_L2_bound,
)
from .ensembles import (
    EnsembleSpec,
    KashinSystem,
    build_kashin,
    haar_orthogonal,
    kashin_from_orthogonal,
    kashin_system,
    parse_spec,
    sample,
)
from .errors import (
    ConvergenceFailure,
    DimensionMismatch,
    EstimateUnstable,
    InvalidParameter,
    InvariantViolation,
    NotAvailable,
    NotPositiveDefinite,
    PreconditionViolated,
    SpectralBarrierError,
)
from .harness import (
    BoundSpec,
    ExperimentConfig,
    ExperimentReport,
    PhiMode,
    config_from_dict,
    config_to_dict,
    emit_report,
    run_experiment,
    sweep,
)
from .kernels import available_backends, backend_name
from .linalg import (
    ShiftedFactorization,
    big_Q,
    min_eigenvalue,
    rank_one_update,
    shifted_factorize,
    shifted_inverse_trace,
    small_q,
)
from .matio import load_matrix, save_matrix
from .moments import (
    BoundPair,
    McBudget,
    MomentProfile,
    Value,
    compute_profile,
    estimate_Kp,
    exact_moments,
    prop1_C_upper,
    prop1_c_lower_from_L,
    prop1_c_lower_from_M,
)

__all__ = [name for name in dir() if not name.startswith("_")]
