"""Staged pseudo-inverse decoding with thresholded gradient updates for NMF."""

__version__ = "0.1.0"

from .baselines import BaselineConfig, anls_step, hals_step, mu_step, run_baseline
from .linalg import (
    least_squares_coefficients,
    pseudo_inverse,
    spectral_norm,
    threshold_elementwise,
)
from .metrics import (
    Decomposition,
    ErrorReport,
    Evaluator,
    column_correlation_error,
    decompose,
    noise_moments,
    total_correlation_error,
)
from .solver import (
    AndConfig,
    DivergenceError,
    ThresholdSchedule,
    decode,
    gradient_update,
    run,
    simulate_update_recurrence,
    stage_threshold,
)
from .synth import (
    Dataset,
    GroundTruth,
    Initialization,
    InitSpec,
    NoiseSpec,
    generate_dataset,
    generate_ground_truth,
    generate_initialization,
)
from .weights import (
    DecayProfile,
    GccEstimate,
    GccParams,
    WeightSpec,
    decay_profile,
    gcc_closed_form,
    gcc_from_samples,
    sample_weights,
)

__all__ = [
    "AndConfig",
    "BaselineConfig",
    "Dataset",
    "DecayProfile",
    "Decomposition",
    "DivergenceError",
    "ErrorReport",
    "Evaluator",
    "GccEstimate",
    "GccParams",
    "GroundTruth",
    "InitSpec",
    "Initialization",
    "NoiseSpec",
    "ThresholdSchedule",
    "WeightSpec",
    "anls_step",
    "column_correlation_error",
    "decay_profile",
    "decode",
    "decompose",
    "gcc_closed_form",
    "gcc_from_samples",
    "generate_dataset",
    "generate_ground_truth",
    "generate_initialization",
    "gradient_update",
    "hals_step",
    "least_squares_coefficients",
    "mu_step",
    "noise_moments",
    "pseudo_inverse",
    "run",
    "run_baseline",
    "sample_weights",
    "simulate_update_recurrence",
    "spectral_norm",
    "stage_threshold",
    "threshold_elementwise",
    "total_correlation_error",
]
