"""Invariance measurement toolkit for softmax prediction dumps.

Scores how consistently a classifier holds its predictions when inputs
are rotated or grayscaled, using labeled or unlabeled prediction dumps,
and relates those scores to accuracy across model populations.
"""

__version__ = "0.1.0"

from ._kernels import USING_NUMBA
from .errors import (
    BadMagicError,
    ConfigError,
    DegenerateInputError,
    EibenchError,
    FormatError,
    HeaderPayloadMismatchError,
    PairingMismatchError,
    TruncatedStreamError,
    ValidationFailure,
)
from .predstore import (
    FORMAT_VERSION,
    IDENTITY,
    MAGIC,
    ROTATION_TAGS,
    ROW_SUM_TOL,
    TRANSFORM_TAGS,
    PairedPredictions,
    PredictionHeader,
    PredictionSet,
    ValidationReport,
    Violation,
    pair,
    read_csv_predictions,
    read_predictions,
    read_predictions_file,
    validate,
    write_predictions,
    write_predictions_file,
)
from .imgxform import apply_tag, grayscale, rotate90k, transform_dataset
from .metrics import (
    MEASURE_KINDS,
    ROTATION_AVG,
    InvarianceRecord,
    TopPrediction,
    accuracy,
    accuracy_difference,
    confidence_only,
    consistency_conf_diff,
    consistency_only,
    ei_aggregate,
    ei_sample,
    js_divergence,
    l2_distance,
    measure,
    rotation_ei,
    top_prediction,
)
from .stats import (
    HUBER_TUNING,
    LOGIT_EPS,
    BootstrapBand,
    CorrelationStats,
    LinearFit,
    SampleXY,
    average_ranks,
    bootstrap_band,
    correlate,
    huber_fit,
    inverse_logit,
    logit_scale,
    pearson,
    spearman,
)
from .synth import (
    Population,
    PopulationConfig,
    SyntheticModel,
    expected_ei,
    generate_population,
)
from .analysis import (
    DATASET_CENTRIC,
    MODEL_CENTRIC,
    AccuracyPrediction,
    AccuracyPredictor,
    DatasetEntry,
    ModelRecord,
    StudyReport,
    accuracy_predictor,
    dataset_centric_study,
    entry_from_pair,
    fit_accuracy_predictor,
    load_records,
    model_centric_study,
    predict_accuracy,
    rank_models,
    save_records,
)

__all__ = [
    "__version__",
    "USING_NUMBA",
    "EibenchError",
    "ValidationFailure",
    "PairingMismatchError",
    "DegenerateInputError",
    "ConfigError",
    "FormatError",
    "BadMagicError",
    "TruncatedStreamError",
    "HeaderPayloadMismatchError",
    "MAGIC",
    "FORMAT_VERSION",
    "ROW_SUM_TOL",
    "IDENTITY",
    "ROTATION_TAGS",
    "TRANSFORM_TAGS",
    "PredictionHeader",
    "PredictionSet",
    "PairedPredictions",
    "Violation",
    "ValidationReport",
    "validate",
    "pair",
    "read_predictions",
    "read_predictions_file",
    "read_csv_predictions",
    "write_predictions",
    "write_predictions_file",
    "rotate90k",
    "grayscale",
    "apply_tag",
    "transform_dataset",
    "MEASURE_KINDS",
    "ROTATION_AVG",
    "TopPrediction",
    "InvarianceRecord",
    "top_prediction",
    "ei_sample",
    "ei_aggregate",
    "rotation_ei",
    "js_divergence",
    "l2_distance",
    "accuracy",
    "accuracy_difference",
    "confidence_only",
    "consistency_only",
    "consistency_conf_diff",
    "measure",
    "LOGIT_EPS",
    "HUBER_TUNING",
    "SampleXY",
    "LinearFit",
    "BootstrapBand",
    "CorrelationStats",
    "average_ranks",
    "pearson",
    "spearman",
    "logit_scale",
    "inverse_logit",
    "huber_fit",
    "bootstrap_band",
    "correlate",
    "PopulationConfig",
    "Population",
    "SyntheticModel",
    "expected_ei",
    "generate_population",
    "MODEL_CENTRIC",
    "DATASET_CENTRIC",
    "DatasetEntry",
    "ModelRecord",
    "StudyReport",
    "AccuracyPrediction",
    "AccuracyPredictor",
    "accuracy_predictor",
    "entry_from_pair",
    "load_records",
    "save_records",
    "model_centric_study",
    "dataset_centric_study",
    "fit_accuracy_predictor",
    "predict_accuracy",
    "rank_models",
]
