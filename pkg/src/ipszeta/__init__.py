"""Operator algebra, spectra and zeta functions for nearest-neighbour
interacting particle systems, with a Domany-Kinzel Monte Carlo lane."""

__version__ = "0.1.0"

from .errors import (
    DenseUnavailable,
    IpsZetaError,
    LengthMismatch,
    NoBracket,
    NoConvergence,
    ParamOutOfRange,
    SingularFactor,
    SizeCapExceeded,
    SparsityViolation,
)
from .operators import (
    DENSE_SITE_CAP,
    MATRIX_FREE_SITE_CAP,
    Configuration,
    GlobalOperator,
    LocalOperator,
    OperatorClass,
    OperatorKind,
    apply_matrix_free,
    build_global_kronecker,
    build_global_recursive,
    classify,
    config_bits,
    config_index,
    identity_local,
    make_local_operator,
    qca_rotation_local,
    random_local_operator,
    sample_pca_step,
)
from .spectral import (
    EIG_DIM_CAP,
    ClosedFormTrace,
    HistogramGrid,
    SpectrumMultiset,
    VerificationReport,
    eig_dense,
    histogram,
    match_multisets,
    shift_coefficients,
    spec_union,
    t_case_spectrum,
    trace_closed_form,
    verify_spectral_recursion,
)
from .zeta import (
    TRACE_SITE_CAP,
    BinomialWeights,
    ZetaSeries,
    c_r,
    power_trace_coefficients,
    qca_rotation_check,
    spectral_radius_estimate,
    t_case_c_r,
    t_case_log_zeta,
    trace_path_sum,
    zeta_det,
    zeta_log_series,
)
from .dk import (
    CriticalScanResult,
    DKParams,
    LatticeState,
    SurvivalEstimate,
    dk_entries,
    dk_local_operator,
    dk_reference_spectrum_n3,
    dk_step,
    estimate_survival,
    rho_q1_closed,
    scan_critical,
    wilson_interval,
)
