"""Nonlinear double-capacitor battery model: simulation and identification."""

from .model import (
    BasicNdcModel,
    CircuitState,
    ComparisonModel,
    ConstantR0,
    NdcModel,
    NdcParams,
    OcvPolynomial,
    R0Law,
    RintModel,
    SimResult,
    SocDependentR0,
    TheveninModel,
    continuous_matrices,
    simulate,
    soc_trajectory,
    zoh_matrices,
)
from .data import (
    Constant,
    Dataset,
    Metrics,
    ParseError,
    ProfileSpec,
    Pulse,
    ScaledDriveCycle,
    export_series,
    generate_profile,
    metrics,
    read_dataset,
    synthesize,
    write_dataset,
)
from .ident_cc import (
    BoxBounds,
    CcFitResult,
    CcTheta,
    beta_from_physical_cc,
    cc_jacobian,
    fit_cc,
    fit_soc_ocv,
    predict_voltage_cc,
    reconstruct_physical_cc,
    vs_closed_form,
)
from .wiener import (
    GaussianPrior,
    IterationRecord,
    MapConfig,
    MODEL_KINDS,
    NearDegenerateWarning,
    WienerSolveResult,
    WienerTheta,
    beta_from_physical,
    comparison_model_from_theta,
    filter_v1,
    filter_vs,
    free_mask,
    identify_wiener,
    map_cost,
    map_gradient,
    predict_voltage_wiener,
    quasi_newton_solve,
    reconstruct_physical_wiener,
    sensitivity_matrix,
    theta_from_physical,
)

__version__ = "0.1.0"
