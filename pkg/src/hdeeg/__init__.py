"""Hyperdimensional computing for EEG seizure detection.

Binary hypervector primitives, five EEG encoding schemes, single-pass and
OnlineHD class models, per-feature analysis with feature selection, and
episode/duration scoring.
"""

__version__ = "0.1.0"

from .dataset import SynthSpec, generate_synthetic, select_data
from .encoders import BatchEncoder, EncoderConfig, Scheme, cost_model, encode_window
from .errors import (ConfigError, DataError, DegenerateTraining, HDError, InsufficientData, InvalidArgument,
                     ParseError, SchemeMismatch)
from .evaluation import EvalReport, evaluate, postprocess
from .features import FEATURE_NAMES, FeatureTensor, Recording, bandpass_filter, extract_features
from .hdc import Hypervector, ItemMemory, bind, bundle_threshold, hamming
from .learner import Mode, Models, TrainConfig, classify, train
from .pipeline import PipelineConfig, cross_validate, subject_fold_tensors

__all__ = [
    "BatchEncoder", "ConfigError", "DataError", "DegenerateTraining", "EncoderConfig", "EvalReport",
    "FEATURE_NAMES", "FeatureTensor", "HDError", "Hypervector", "InsufficientData", "InvalidArgument",
    "ItemMemory", "Mode", "Models", "ParseError", "PipelineConfig", "Recording", "Scheme",
    "SchemeMismatch", "SynthSpec", "TrainConfig", "bandpass_filter", "bind", "bundle_threshold",
    "classify", "cost_model", "cross_validate", "encode_window", "evaluate", "extract_features",
    "generate_synthetic", "hamming", "postprocess", "select_data", "subject_fold_tensors", "train",
]
