"""Feature-space out-of-distribution detection via reconstruction difficulty.

A small denoiser is fit to in-distribution feature vectors; at inference
each vector is repeatedly perturbed and reconstructed, keeping the
hardest candidate, and the amplified reconstruction error is compared
against a data-driven threshold.

Pipeline: ``synthetic`` (or any producer of the feature-file format) ->
``diffusion`` (train/save/load the denoiser) -> ``scoring`` (difficulty
scores + threshold) -> ``metrics`` (five-metric report). ``cli`` wires
the same steps into commands.
"""

from .diffusion import (
    SIGMA_MAX,
    SIGMA_MIN,
    DenoiserParams,
    NoiseLevelSampler,
    Preconditioning,
    TrainConfig,
    denoise,
    load_model,
    precondition_coeffs,
    save_model,
    train,
    training_loss,
)
from .errors import (
    ConfigError,
    DimensionError,
    FormatError,
    RaadError,
    ScoringError,
    TrainingError,
)
from .features import (
    FeatureDataset,
    Manifest,
    ManifestEntry,
    load_split,
    read_features,
    read_manifest,
    write_features,
    write_manifest,
)
from .metrics import (
    EvalReport,
    auc_score,
    confusion_metrics,
    format_report_table,
    sweep_thresholds,
)
from .reconstruct import ReverseConfig, geometric_schedule, reconstruct
from .scoring import (
    RAAConfig,
    ScoreRecord,
    ThresholdConfig,
    calibrate_threshold,
    classify,
    raa_score,
    read_scores,
    read_threshold,
    sample_stream,
    score_dataset,
    write_scores,
    write_threshold,
)
from .synthetic import (
    GaussianMixture,
    IsotropicGaussian,
    MeanShift,
    ScaleShift,
    SubspaceOffset,
    SyntheticSpec,
    default_benchmark_spec,
    generate,
    write_benchmark,
)

__version__ = "0.1.0"

__all__ = [
    "SIGMA_MAX",
    "SIGMA_MIN",
    "ConfigError",
    "DenoiserParams",
    "DimensionError",
    "EvalReport",
    "FeatureDataset",
    "FormatError",
    "GaussianMixture",
    "IsotropicGaussian",
    "Manifest",
    "ManifestEntry",
    "MeanShift",
    "NoiseLevelSampler",
    "Preconditioning",
    "RAAConfig",
    "RaadError",
    "ReverseConfig",
    "ScaleShift",
    "ScoreRecord",
    "ScoringError",
    "SubspaceOffset",
    "SyntheticSpec",
    "ThresholdConfig",
    "TrainConfig",
    "TrainingError",
    "auc_score",
    "calibrate_threshold",
    "classify",
    "confusion_metrics",
    "default_benchmark_spec",
    "denoise",
    "format_report_table",
    "generate",
    "geometric_schedule",
    "load_model",
    "load_split",
    "precondition_coeffs",
    "raa_score",
    "read_features",
    "read_manifest",
    "read_scores",
    "read_threshold",
    "reconstruct",
    "sample_stream",
    "save_model",
    "score_dataset",
    "sweep_thresholds",
    "train",
    "training_loss",
    "write_benchmark",
    "write_features",
    "write_manifest",
    "write_scores",
    "write_threshold",
]
