"""Quantum hidden Markov machines, their classical baseline, and the
open-system dynamics that realize them on a coarse-grained clock."""

from .ensemble import (
    EmpiricalDistribution,
    EnsembleConfig,
    EnsembleResult,
    MasterComparison,
    ensemble_vs_master,
    run_ensemble,
    total_variation,
)
from .errors import (
    DimensionMismatchError,
    EnumerationTooLargeError,
    ModelFormatError,
    NumericFailureError,
    TimeStepTooLargeError,
    TimeStepWarning,
    ToolkitError,
    UnknownSymbolError,
    ValidationError,
    ZeroProbabilityError,
)
from .hmm import HMM, random_hmm
from .hqmm import (
    HQMM,
    LabeledKrausSet,
    completeness_defect,
    embed_hmm,
    random_hqmm,
)
from .linalg import (
    DensityMatrix,
    dagger,
    matrix_exp,
    random_density_matrix,
    trace,
    trace_distance,
    validate_unitary,
)
from .modelfile import OpenSystemModel, parse_model, serialize_model, write_model
from .opensystem import (
    ConsistencyPoint,
    DiscretizationResult,
    FeedbackChannel,
    JumpTerm,
    OpenSystemSpec,
    channel_vs_master,
    conditional_hamiltonian,
    discretize,
    effective_jump_operator,
    master_rhs,
    rk4_evolve,
)
from .rng import GENERATOR_ID, derive_trajectory_seed

__all__ = [
    "HMM",
    "HQMM",
    "ConsistencyPoint",
    "DensityMatrix",
    "DimensionMismatchError",
    "DiscretizationResult",
    "EmpiricalDistribution",
    "EnsembleConfig",
    "EnsembleResult",
    "EnumerationTooLargeError",
    "FeedbackChannel",
    "GENERATOR_ID",
    "JumpTerm",
    "LabeledKrausSet",
    "MasterComparison",
    "ModelFormatError",
    "NumericFailureError",
    "OpenSystemModel",
    "OpenSystemSpec",
    "TimeStepTooLargeError",
    "TimeStepWarning",
    "ToolkitError",
    "UnknownSymbolError",
    "ValidationError",
    "ZeroProbabilityError",
    "channel_vs_master",
    "completeness_defect",
    "conditional_hamiltonian",
    "dagger",
    "derive_trajectory_seed",
    "discretize",
    "effective_jump_operator",
    "embed_hmm",
    "ensemble_vs_master",
    "master_rhs",
    "matrix_exp",
    "parse_model",
    "random_density_matrix",
    "random_hmm",
    "random_hqmm",
    "rk4_evolve",
    "run_ensemble",
    "serialize_model",
    "total_variation",
    "trace",
    "trace_distance",
    "validate_unitary",
    "write_model",
]

__version__ = "0.1.0"
