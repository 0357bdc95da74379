"""Per-feature analysis of feat-append models and incremental feature selection.

Under feat-append, bits ``[f*d, (f+1)*d)`` of every encoding and class model
belong to feature ``f`` alone, so distances, predictions and class
separability can be measured feature by feature.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .encoders import EncoderConfig, Scheme
from .errors import DegenerateTraining, InvalidArgument, SchemeMismatch
from .evaluation import EvalReport, evaluate_segments
from .hdc import Hypervector, hamming, slice_hv, unpack_bits
from .learner import Models


class Strategy(str, enum.Enum):
    BY_PERFORMANCE = "perf"
    BY_CONFIDENCE = "conf"
    GREEDY_PERF_CORR = "greedy"


class Target(str, enum.Enum):
    F1E = "f1e"
    F1DE = "f1de"


def _require_append(cfg: EncoderConfig, models: Models | None = None) -> None:
    if cfg.scheme is not Scheme.FEAT_APPEND:
        raise SchemeMismatch(f"per-feature analysis needs feat-append, got {cfg.scheme}")
    if models is not None and models.dim != cfg.out_dim:
        raise SchemeMismatch(f"model dim {models.dim} does not match feat-append dim {cfg.out_dim}")


def feature_distances(packed: np.ndarray, models: Models, cfg: EncoderConfig,
                      chunk: int = 256) -> tuple[np.ndarray, np.ndarray]:
    """Per-window, per-feature distances to the seizure and non-seizure models.

    Returns two (W, numFeat) arrays of normalized Hamming distances computed
    on each feature's bit slice.
    """
    _require_append(cfg, models)
    F, d, D = cfg.num_feat, cfg.subdim, cfg.out_dim
    s_bits = models.seizure.hv.bits().reshape(F, d)
    ns_bits = models.nonseizure.hv.bits().reshape(F, d)
    W = packed.shape[0]
    d_s = np.empty((W, F))
    d_ns = np.empty((W, F))
    for a in range(0, W, chunk):
        x = unpack_bits(packed[a:a + chunk], D).reshape(-1, F, d)
        d_s[a:a + chunk] = (x != s_bits).sum(axis=-1) / d
        d_ns[a:a + chunk] = (x != ns_bits).sum(axis=-1) / d
    return d_s, d_ns


def feature_predict(x: Hypervector, models: Models, f: int, cfg: EncoderConfig) -> tuple[int, float, float]:
    _require_append(cfg, models)
    if not 0 <= f < cfg.num_feat:
        raise InvalidArgument(f"feature index {f} outside [0, {cfg.num_feat})")
    lo, hi = f * cfg.subdim, (f + 1) * cfg.subdim
    xs = slice_hv(x, lo, hi)
    d_s = hamming(xs, slice_hv(models.seizure.hv, lo, hi))
    d_ns = hamming(xs, slice_hv(models.nonseizure.hv, lo, hi))
    return int(d_s < d_ns), d_s, d_ns


def separability(models: Models, f: int, cfg: EncoderConfig) -> float:
    _require_append(cfg, models)
    lo, hi = f * cfg.subdim, (f + 1) * cfg.subdim
    return hamming(slice_hv(models.seizure.hv, lo, hi), slice_hv(models.nonseizure.hv, lo, hi))


def certainty(d_s, d_ns) -> np.ndarray:
    """Class-distance gap of each feature relative to the mean gap at that window.

    Works on one window (1-D arrays over features) or many (2-D, window x
    feature). Windows where every gap is zero get certainty 0.
    """
    gap = np.abs(np.asarray(d_s, dtype=np.float64) - np.asarray(d_ns, dtype=np.float64))
    mean = gap.mean(axis=-1, keepdims=True)
    with np.errstate(invalid="ignore", divide="ignore"):
        c = np.where(mean > 0, gap / np.where(mean > 0, mean, 1.0), 0.0)
    return c


def confidence(c_f, predictions, truth) -> float:
    """Relative surplus of certainty on correct over wrong predictions.

    Returns +inf when the feature is never wrong and -inf when never right.
    """
    c_f = np.asarray(c_f, dtype=np.float64)
    correct = np.asarray(predictions) == np.asarray(truth)
    if not correct.any():
        return -np.inf
    if correct.all():
        return np.inf
    wrong_mean = c_f[~correct].mean()
    right_mean = c_f[correct].mean()
    if wrong_mean == 0:
        return np.inf if right_mean > 0 else 0.0
    return float((right_mean - wrong_mean) / wrong_mean)


def prediction_correlation(predictions) -> np.ndarray:
    """Pearson correlation between per-feature binary prediction series.

    Constant series correlate 0 with everything and 1 with themselves.
    """
    p = np.asarray(predictions, dtype=np.float64)
    if p.ndim != 2 or p.shape[0] < 2:
        raise InvalidArgument("need a (window, feature) matrix with at least 2 windows")
    centered = p - p.mean(axis=0)
    norm = np.sqrt((centered ** 2).sum(axis=0))
    ok = norm > 0
    corr = np.zeros((p.shape[1], p.shape[1]))
    sub = centered[:, ok] / norm[ok]
    corr[np.ix_(ok, ok)] = np.clip(sub.T @ sub, -1.0, 1.0)
    np.fill_diagonal(corr, 1.0)
    return corr


def vote_scores(d_s, d_ns, active) -> np.ndarray:
    active = list(active)
    if not active:
        raise InvalidArgument("vote needs at least one active feature")
    d_s = np.asarray(d_s)
    d_ns = np.asarray(d_ns)
    return (d_ns[..., active] - d_s[..., active]).sum(axis=-1)


def vote(d_s, d_ns, active) -> np.ndarray | int:
    """Seizure where the summed distance gap over ``active`` is positive."""
    score = vote_scores(d_s, d_ns, active)
    labels = (score > 0).astype(np.uint8)
    return int(labels) if labels.ndim == 0 else labels


@dataclass
class Segment:
    """Per-feature distances and truth of one contiguous file."""

    d_s: np.ndarray  # (W, F)
    d_ns: np.ndarray
    truth: np.ndarray

    @property
    def predictions(self) -> np.ndarray:
        return (self.d_s < self.d_ns).astype(np.uint8)


@dataclass
class PerFeatureMetrics:
    feature: int
    predictions: np.ndarray
    certainty: np.ndarray
    confidence: float
    separability: float
    perf: EvalReport
    perf_post: EvalReport


def _concat(segments: list[Segment]) -> Segment:
    return Segment(np.concatenate([s.d_s for s in segments]), np.concatenate([s.d_ns for s in segments]),
                   np.concatenate([s.truth for s in segments]))


def per_feature_metrics(models: Models, segments: list[Segment], cfg: EncoderConfig,
                        postprocess_window: float = 5.0, step_s: float = 0.5) -> list[PerFeatureMetrics]:
    _require_append(cfg, models)
    allw = _concat(segments)
    preds = allw.predictions
    cert = certainty(allw.d_s, allw.d_ns)
    out = []
    for f in range(cfg.num_feat):
        pairs = [(s.truth, s.predictions[:, f]) for s in segments]
        out.append(PerFeatureMetrics(
            feature=f,
            predictions=preds[:, f],
            certainty=cert[:, f],
            confidence=confidence(cert[:, f], preds[:, f], allw.truth),
            separability=separability(models, f, cfg),
            perf=evaluate_segments(pairs, None, step_s),
            perf_post=evaluate_segments(pairs, postprocess_window, step_s),
        ))
    return out


def subset_report(segments: list[Segment], active, postprocess_window: float | None,
                  step_s: float = 0.5) -> EvalReport:
    pairs = [(s.truth, vote(s.d_s, s.d_ns, active)) for s in segments]
    return evaluate_segments(pairs, postprocess_window, step_s)


@dataclass
class SelectionResult:
    strategy: Strategy
    target: Target
    ordering: list[int]
    perf_curve_train: list[EvalReport]
    perf_curve_test: list[EvalReport] = field(default_factory=list)
    chosen_n: int = 0

    @property
    def chosen_features(self) -> set[int]:
        return set(self.ordering[:self.chosen_n])

    def train_curve(self) -> np.ndarray:
        return np.array([getattr(r, self.target.value) for r in self.perf_curve_train])

    def test_curve(self) -> np.ndarray:
        return np.array([getattr(r, self.target.value) for r in self.perf_curve_test])


def _rank(values) -> list[int]:
    # descending, ties to the lower index
    return sorted(range(len(values)), key=lambda f: (-values[f], f))


def select_features(train: list[Segment], strategy: Strategy | str, target: Target | str = Target.F1DE,
                    test: list[Segment] | None = None, postprocess_window: float | None = 5.0,
                    step_s: float = 0.5) -> SelectionResult:
    """Order features with ``strategy`` and pick the best prefix on the training curve.

    ``test`` only fills the test curve; it never influences the ordering or
    the chosen size.
    """
    strategy = Strategy(strategy)
    target = Target(target)
    if not train:
        raise InvalidArgument("no training segments")
    allw = _concat(train)
    if allw.truth.all() or not allw.truth.any():
        raise DegenerateTraining("feature selection needs both classes in the training set")
    F = allw.d_s.shape[1]

    def score(active) -> float:
        return getattr(subset_report(train, active, postprocess_window, step_s), target.value)

    if strategy is Strategy.BY_PERFORMANCE:
        ordering = _rank([score([f]) for f in range(F)])
    elif strategy is Strategy.BY_CONFIDENCE:
        preds = allw.predictions
        cert = certainty(allw.d_s, allw.d_ns)
        ordering = _rank([confidence(cert[:, f], preds[:, f], allw.truth) for f in range(F)])
    else:
        ordering = []
        remaining = list(range(F))
        while remaining:
            scores = [score(ordering + [f]) for f in remaining]
            best = remaining[int(np.argmax(scores))]
            ordering.append(best)
            remaining.remove(best)

    curve_train = [subset_report(train, ordering[:n], postprocess_window, step_s) for n in range(1, F + 1)]
    curve_test = [] if test is None else [subset_report(test, ordering[:n], postprocess_window, step_s)
                                          for n in range(1, F + 1)]
    values = [getattr(r, target.value) for r in curve_train]
    chosen_n = int(np.argmax(values)) + 1
    return SelectionResult(strategy, target, ordering, curve_train, curve_test, chosen_n)
