"""regcheck: specification testing for parametric regression mean functions."""

__version__ = "0.1.0"

from .bootstrap import (
    BootstrapConfig,
    TestOutcome,
    critical_value,
    p_value,
    smooth_residual_bootstrap,
    wild_bootstrap_icm,
)
from .model import (
    Dataset,
    FittedModel,
    ModelSpec,
    fit_least_squares,
    make_linear_model,
    standardize,
)
from .sim import (
    Dgp,
    LocalAlternativeSpec,
    SimResult,
    SimRow,
    SimStudyConfig,
    emit_table,
    generate,
    generate_local,
    parse_flat,
    run_study,
)
from .statistic import (
    GAUSSIAN_KERNEL,
    KernelWeight,
    WeightVector,
    alternative_drift,
    icm_statistic,
    kernel_from_density,
    m_phi_gaussian,
    plug_in_covariance,
    u_hat,
    wicm_statistic,
)
from .weights import (
    BasisSet,
    DirectionalAlternative,
    SdrEstimate,
    cse_directions,
    directional_weight,
    gram_schmidt_basis,
    mere_dimension,
    nonparametric_weight,
)

__all__ = [
    "BasisSet",
    "BootstrapConfig",
    "Dataset",
    "Dgp",
    "DirectionalAlternative",
    "FittedModel",
    "GAUSSIAN_KERNEL",
    "KernelWeight",
    "LocalAlternativeSpec",
    "ModelSpec",
    "SdrEstimate",
    "SimResult",
    "SimRow",
    "SimStudyConfig",
    "TestOutcome",
    "WeightVector",
    "alternative_drift",
    "critical_value",
    "cse_directions",
    "directional_weight",
    "emit_table",
    "fit_least_squares",
    "generate",
    "generate_local",
    "gram_schmidt_basis",
    "icm_statistic",
    "kernel_from_density",
    "m_phi_gaussian",
    "make_linear_model",
    "mere_dimension",
    "nonparametric_weight",
    "p_value",
    "parse_flat",
    "plug_in_covariance",
    "run_study",
    "smooth_residual_bootstrap",
    "standardize",
    "u_hat",
    "wicm_statistic",
    "wild_bootstrap_icm",
]
