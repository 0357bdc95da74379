"""Leave-one-seizure-out cross-validation over fold feature tensors."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .analysis import PerFeatureMetrics, Segment, SelectionResult, Strategy, Target, feature_distances, \
    per_feature_metrics, prediction_correlation, select_features
from .encoders import BatchEncoder, EncoderConfig, Scheme
from .errors import InsufficientData
from .evaluation import EvalReport, MeanReport, evaluate, postprocess
from .features import FeatureTensor, discretize, fit_normalization
from .hdc import DEFAULT_DIM
from .learner import Models, TrainConfig, classify_batch, train

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class PipelineConfig:
    scheme: Scheme = Scheme.FEAT_X_CH_X_VAL
    dim: int = DEFAULT_DIM
    num_bins: int = 20
    seed: int = 0
    level_per_feature: bool = False
    train: TrainConfig = field(default_factory=TrainConfig)
    postprocess_window: float = 5.0

    def __post_init__(self):
        object.__setattr__(self, "scheme", Scheme(self.scheme))

    def encoder_config(self, num_ch: int, num_feat: int, scheme: Scheme | None = None) -> EncoderConfig:
        return EncoderConfig(scheme or self.scheme, self.dim, num_feat, num_ch, self.num_bins, self.seed,
                             self.level_per_feature)

    def to_dict(self) -> dict:
        return {"scheme": self.scheme.value, "dim": self.dim, "num_bins": self.num_bins, "seed": self.seed,
                "level_per_feature": self.level_per_feature, "train": self.train.to_dict(),
                "postprocess_window": self.postprocess_window}


def _shape(tensors: list[FeatureTensor]) -> tuple[int, int]:
    _, c, f = tensors[0].values.shape
    return c, f


def discretize_split(train_tensors: list[FeatureTensor], others: list[FeatureTensor], num_bins: int):
    """Fit min/max on ``train_tensors`` only and bin every tensor with it."""
    norm = fit_normalization(train_tensors)
    return ([discretize(t, norm, num_bins) for t in train_tensors],
            [discretize(t, norm, num_bins) for t in others], norm)


def fit_models(encoder: BatchEncoder, tensors: list[FeatureTensor],
               cfg: TrainConfig) -> tuple[Models, list[np.ndarray]]:
    packed = [encoder.encode(t.bins) for t in tensors]
    labels = np.concatenate([t.labels for t in tensors])
    models = train(np.concatenate(packed), labels, cfg, dim=encoder.cfg.out_dim,
                   encoder_digest=encoder.cfg.digest())
    return models, packed


@dataclass
class FoldResult:
    name: str
    truth: np.ndarray
    raw_pred: np.ndarray
    post_pred: np.ndarray
    raw: EvalReport
    post: EvalReport
    d_s: np.ndarray | None = None
    d_ns: np.ndarray | None = None


@dataclass
class CVResult:
    folds: list[FoldResult]

    @property
    def mean_raw(self) -> MeanReport:
        return MeanReport.of([f.raw for f in self.folds])

    @property
    def mean_post(self) -> MeanReport:
        return MeanReport.of([f.post for f in self.folds])


Predictor = Callable[[list[FeatureTensor], FeatureTensor], np.ndarray]


def cross_validate(tensors: list[FeatureTensor], cfg: PipelineConfig = PipelineConfig(),
                   names: list[str] | None = None, predictor: Predictor | None = None,
                   encoder: BatchEncoder | None = None) -> CVResult:
    """Hold out each fold tensor once, train on the rest, score the held-out fold.

    ``predictor`` replaces the HD pipeline (fit on raw training tensors,
    predict the test tensor) for plumbing checks.
    """
    if len(tensors) < 2:
        raise InsufficientData(f"cross-validation needs at least 2 folds, got {len(tensors)}")
    names = names or [f"fold{i}" for i in range(len(tensors))]
    num_ch, num_feat = _shape(tensors)
    if predictor is None and encoder is None:
        encoder = BatchEncoder(cfg.encoder_config(num_ch, num_feat))
    step = tensors[0].step_s
    results = []
    for i, test in enumerate(tensors):
        train_t = tensors[:i] + tensors[i + 1:]
        d_s = d_ns = None
        if predictor is not None:
            pred = np.asarray(predictor(train_t, test), dtype=np.uint8)
        else:
            train_b, (test_b,), _ = discretize_split(train_t, [test], cfg.num_bins)
            models, _ = fit_models(encoder, train_b, cfg.train)
            pred, d_s, d_ns = classify_batch(encoder.encode(test_b.bins), models)
        post = postprocess(pred, step, cfg.postprocess_window)
        results.append(FoldResult(names[i], test.labels, pred, post, evaluate(test.labels, pred),
                                  evaluate(test.labels, post), d_s, d_ns))
    return CVResult(results)


def train_all(tensors: list[FeatureTensor], cfg: PipelineConfig) -> tuple[Models, np.ndarray, EncoderConfig]:
    """Train one model on every fold tensor (deployment model)."""
    num_ch, num_feat = _shape(tensors)
    enc_cfg = cfg.encoder_config(num_ch, num_feat)
    encoder = BatchEncoder(enc_cfg)
    binned, _, norm = discretize_split(tensors, [], cfg.num_bins)
    models, _ = fit_models(encoder, binned, cfg.train)
    return models, norm, enc_cfg


@dataclass
class FoldSelection:
    name: str
    results: dict[tuple[Strategy, Target], SelectionResult]
    per_feature: list[PerFeatureMetrics]
    correlation: np.ndarray
    raw_results: dict[tuple[Strategy, Target], SelectionResult] = field(default_factory=dict)


def feature_selection_cv(tensors: list[FeatureTensor], cfg: PipelineConfig,
                         strategies=tuple(Strategy), targets=(Target.F1DE,),
                         names: list[str] | None = None, raw_curves: bool = False) -> list[FoldSelection]:
    """Per held-out fold: train feat-append models, analyse features, run every strategy.

    Selection only sees the training folds; the held-out fold fills the test
    curves. With ``raw_curves`` the selection is also repeated on
    non-post-processed labels.
    """
    if len(tensors) < 2:
        raise InsufficientData(f"cross-validation needs at least 2 folds, got {len(tensors)}")
    names = names or [f"fold{i}" for i in range(len(tensors))]
    num_ch, num_feat = _shape(tensors)
    enc_cfg = cfg.encoder_config(num_ch, num_feat, Scheme.FEAT_APPEND)
    encoder = BatchEncoder(enc_cfg)
    step = tensors[0].step_s
    out = []
    for i in range(len(tensors)):
        train_t = tensors[:i] + tensors[i + 1:]
        train_b, (test_b,), _ = discretize_split(train_t, [tensors[i]], cfg.num_bins)
        models, packed = fit_models(encoder, train_b, cfg.train)
        train_segs = [Segment(*feature_distances(p, models, enc_cfg), t.labels) for p, t in zip(packed, train_b)]
        test_seg = Segment(*feature_distances(encoder.encode(test_b.bins), models, enc_cfg), test_b.labels)
        pfm = per_feature_metrics(models, train_segs, enc_cfg, cfg.postprocess_window, step)
        corr = prediction_correlation(np.stack([m.predictions for m in pfm], axis=1))
        results, raw = {}, {}
        for strategy in strategies:
            for target in targets:
                results[(Strategy(strategy), Target(target))] = select_features(
                    train_segs, strategy, target, [test_seg], cfg.postprocess_window, step)
                if raw_curves:
                    raw[(Strategy(strategy), Target(target))] = select_features(
                        train_segs, strategy, target, [test_seg], None, step)
        out.append(FoldSelection(names[i], results, pfm, corr, raw))
    return out


def with_scheme(cfg: PipelineConfig, scheme: Scheme, seed: int | None = None) -> PipelineConfig:
    return replace(cfg, scheme=scheme, seed=cfg.seed if seed is None else seed)


def subject_fold_tensors(recordings, names: list[str], ratio: float = 10.0, seed: int = 0,
                         band: tuple[float, float] = (1.0, 20.0), order: int = 4,
                         window_len_s: float = 4.0, step_s: float = 0.5) -> list[tuple[str, FeatureTensor]]:
    """Select fold files from a subject's recordings, filter them and extract features."""
    from .dataset import select_data
    from .features import bandpass_filter, extract_features

    folds = select_data(recordings, ratio, seed, names)
    out = []
    for fold in folds:
        rec = bandpass_filter(fold.recording, band[0], band[1], order)
        out.append((fold.name, extract_features(rec, window_len_s, step_s)))
    return out
