"""Label post-processing and episode/duration scoring.

F1 here is the geometric mean of sensitivity and predictivity, and
F1DEgmean is the geometric mean of the episode and duration F1 scores.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields

import numpy as np

from .errors import InvalidArgument

METRICS = ("sens_e", "ppv_e", "f1e", "sens_d", "ppv_d", "f1d", "f1de")


def _labels(x) -> np.ndarray:
    x = np.asarray(x)
    if x.ndim != 1:
        raise InvalidArgument("label series must be 1-D")
    return (x != 0).astype(np.uint8)


def smoothing_width(window_s: float, step_s: float) -> int:
    if step_s <= 0:
        raise InvalidArgument("step_s must be positive")
    if window_s < step_s:
        raise InvalidArgument(f"post-processing window {window_s} s shorter than step {step_s} s")
    k = int(round(window_s / step_s))
    return k + 1 if k % 2 == 0 else k


def postprocess(labels, step_s: float = 0.5, window_s: float = 5.0) -> np.ndarray:
    """Centered moving majority vote; edge windows are truncated and ties give 0."""
    x = _labels(labels)
    if x.size == 0:
        return x
    h = smoothing_width(window_s, step_s) // 2
    csum = np.concatenate([[0], np.cumsum(x, dtype=np.int64)])
    idx = np.arange(x.size)
    lo, hi = np.maximum(idx - h, 0), np.minimum(idx + h + 1, x.size)
    return (2 * (csum[hi] - csum[lo]) > hi - lo).astype(np.uint8)


def episodes(labels) -> list[tuple[int, int]]:
    """Maximal runs of ones as half-open (start, end) index pairs."""
    x = _labels(labels)
    edges = np.diff(np.concatenate([[0], x, [0]]).astype(np.int8))
    starts = np.flatnonzero(edges == 1)
    ends = np.flatnonzero(edges == -1)
    return list(zip(starts.tolist(), ends.tolist()))


def _check_pair(truth, pred) -> tuple[np.ndarray, np.ndarray]:
    t, p = _labels(truth), _labels(pred)
    if t.shape != p.shape:
        raise InvalidArgument(f"length mismatch: truth {t.size} vs prediction {p.size}")
    return t, p


def episode_counts(truth, pred) -> tuple[int, int, int]:
    """(TP, FP, FN) over episodes.

    A true episode is detected if any predicted episode shares a window with
    it; several predictions hitting one episode count once. A predicted
    episode touching no true episode is one false positive.
    """
    t, p = _check_pair(truth, pred)
    tp = fn = fp = 0
    for s, e in episodes(t):
        if p[s:e].any():
            tp += 1
        else:
            fn += 1
    for s, e in episodes(p):
        if not t[s:e].any():
            fp += 1
    return tp, fp, fn


def duration_counts(truth, pred) -> tuple[int, int, int, int]:
    """Per-window (TP, FP, FN, TN)."""
    t, p = _check_pair(truth, pred)
    tp = int(np.sum((t == 1) & (p == 1)))
    fp = int(np.sum((t == 0) & (p == 1)))
    fn = int(np.sum((t == 1) & (p == 0)))
    return tp, fp, fn, t.size - tp - fp - fn


def _ratio(num: int, den: int) -> tuple[float, bool]:
    return (num / den, False) if den else (0.0, True)


@dataclass
class EvalReport:
    tp_e: int = 0
    fp_e: int = 0
    fn_e: int = 0
    tp_d: int = 0
    fp_d: int = 0
    fn_d: int = 0
    tn_d: int = 0

    def __add__(self, other: EvalReport) -> EvalReport:
        return EvalReport(*(getattr(self, f.name) + getattr(other, f.name) for f in fields(self)))

    @property
    def sens_e(self) -> float:
        return _ratio(self.tp_e, self.tp_e + self.fn_e)[0]

    @property
    def ppv_e(self) -> float:
        return _ratio(self.tp_e, self.tp_e + self.fp_e)[0]

    @property
    def sens_d(self) -> float:
        return _ratio(self.tp_d, self.tp_d + self.fn_d)[0]

    @property
    def ppv_d(self) -> float:
        return _ratio(self.tp_d, self.tp_d + self.fp_d)[0]

    @property
    def f1e(self) -> float:
        return math.sqrt(self.sens_e * self.ppv_e)

    @property
    def f1d(self) -> float:
        return math.sqrt(self.sens_d * self.ppv_d)

    @property
    def f1de(self) -> float:
        return math.sqrt(self.f1e * self.f1d)

    @property
    def flags(self) -> list[str]:
        """Metrics whose denominator was empty and were reported as 0."""
        dens = {
            "sens_e": self.tp_e + self.fn_e,
            "ppv_e": self.tp_e + self.fp_e,
            "sens_d": self.tp_d + self.fn_d,
            "ppv_d": self.tp_d + self.fp_d,
        }
        return [k for k, v in dens.items() if v == 0]

    def metrics(self) -> dict[str, float]:
        return {m: getattr(self, m) for m in METRICS}

    def counts(self) -> dict[str, int]:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def evaluate(truth, pred) -> EvalReport:
    tp_e, fp_e, fn_e = episode_counts(truth, pred)
    return EvalReport(tp_e, fp_e, fn_e, *duration_counts(truth, pred))


def evaluate_segments(pairs, postprocess_window: float | None = None, step_s: float = 0.5) -> EvalReport:
    """Pool counts over independent (truth, pred) segments such as files.

    Post-processing, when requested, runs per segment so that smoothing never
    bridges two files.
    """
    total = EvalReport()
    for truth, pred in pairs:
        if postprocess_window is not None:
            pred = postprocess(pred, step_s, postprocess_window)
        total = total + evaluate(truth, pred)
    return total


@dataclass
class MeanReport:
    """Arithmetic mean of final metrics over folds or subjects."""

    values: dict[str, float] = field(default_factory=lambda: dict.fromkeys(METRICS, 0.0))
    n: int = 0

    @classmethod
    def of(cls, items) -> MeanReport:
        items = [r.metrics() if isinstance(r, EvalReport) else r.values for r in items]
        if not items:
            raise InvalidArgument("nothing to average")
        return cls({m: float(np.mean([it[m] for it in items])) for m in METRICS}, len(items))

    def __getattr__(self, name):
        values = self.__dict__.get("values", {})
        if name in values:
            return values[name]
        raise AttributeError(name)

    def metrics(self) -> dict[str, float]:
        return dict(self.values)
