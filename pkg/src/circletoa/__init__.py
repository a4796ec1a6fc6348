"""Time-of-arrival operator and waiting-screen detector on the circle."""

from .basis import BasisTruncation, PhysicalParams
from .operators import (
    HermitianOperator,
    NonHermitianError,
    OrderingKernel,
    RegulatorFunction,
    build_operator_wwsc,
    build_symmetric_closed_form,
    classical_toa,
    free_hamiltonian,
    load_operator,
    quantizer_element,
    save_operator,
)
from .quadrature import InvalidQuadratureError, QuadratureSpec, fourier_coefficient
from .screen import (
    AbsorptionRecord,
    ContractionError,
    EmptyArcError,
    ScreenConfig,
    UndefinedAverageError,
    ZenoGateError,
    absorption_probabilities,
    average_arrival_time,
    gaussian_packet,
    nonuniform_absorption,
    pov_element,
    reflector,
    save_run_record,
    screen_projector,
    zeno_limit_scan,
    zeno_time,
)
from .spectral import (
    SpectralDecomposition,
    StateVector,
    count_eigenvalues_above,
    eigendecompose_hermitian,
    evolve,
    hilbert_schmidt_norm,
    operator_sqrt,
    position_density,
    save_spectrum,
    sign_census,
    spectral_transform,
    time_translation_report,
)

__version__ = "0.1.0"

__all__ = [
    "AbsorptionRecord",
    "BasisTruncation",
    "ContractionError",
    "EmptyArcError",
    "HermitianOperator",
    "InvalidQuadratureError",
    "NonHermitianError",
    "OrderingKernel",
    "PhysicalParams",
    "QuadratureSpec",
    "RegulatorFunction",
    "ScreenConfig",
    "SpectralDecomposition",
    "StateVector",
    "UndefinedAverageError",
    "ZenoGateError",
    "absorption_probabilities",
    "average_arrival_time",
    "build_operator_wwsc",
    "build_symmetric_closed_form",
    "classical_toa",
    "count_eigenvalues_above",
    "eigendecompose_hermitian",
    "evolve",
    "fourier_coefficient",
    "free_hamiltonian",
    "gaussian_packet",
    "hilbert_schmidt_norm",
    "load_operator",
    "nonuniform_absorption",
    "operator_sqrt",
    "position_density",
    "pov_element",
    "quantizer_element",
    "reflector",
    "save_operator",
    "save_run_record",
    "save_spectrum",
    "screen_projector",
    "sign_census",
    "spectral_transform",
    "time_translation_report",
    "zeno_limit_scan",
    "zeno_time",
]
