"""Preprocessing, per-window feature extraction, normalization and binning."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy import signal

from .errors import DegenerateInputError, InvalidArgument, UndefinedDivergence

# (name, low Hz, high Hz); lower edge inclusive, upper exclusive.
BANDS = (
    ("dc", 0.0, 0.5),
    ("mov", 0.1, 0.5),
    ("delta", 0.5, 4.0),
    ("theta", 4.0, 8.0),
    ("alpha", 8.0, 12.0),
    ("middle", 12.0, 13.0),
    ("beta", 12.0, 30.0),
    ("gamma", 30.0, 45.0),
)
TOTAL_BAND = (0.0, 45.0)

FEATURE_NAMES = (
    ["mean_ampl", "line_length", "p_tot"]
    + [f"p_{b}" for b, _, _ in BANDS]
    + [f"p_{b}_rel" for b, _, _ in BANDS]
)
NUM_FEATURES = len(FEATURE_NAMES)


@dataclass
class Recording:
    sample_rate: float
    channels: list[str]
    samples: np.ndarray  # (time, channel)
    annotations: list[tuple[float, float]] = field(default_factory=list)

    def __post_init__(self):
        self.samples = np.asarray(self.samples)
        if self.sample_rate <= 0:
            raise InvalidArgument(f"sample_rate must be positive, got {self.sample_rate}")
        if self.samples.ndim != 2 or self.samples.shape[1] != len(self.channels) or not self.channels:
            raise InvalidArgument(f"samples shape {self.samples.shape} does not match "
                                  f"{len(self.channels)} channels")
        self.annotations = [(float(s), float(e)) for s, e in self.annotations]
        check_annotations(self.annotations, self.duration)

    @property
    def duration(self) -> float:
        return self.samples.shape[0] / self.sample_rate


def check_annotations(annotations, duration: float) -> None:
    prev_end = -np.inf
    for s, e in sorted(annotations):
        if not s < e:
            raise InvalidArgument(f"annotation ({s}, {e}) has start >= end")
        if s < 0 or e > duration + 1e-9:
            raise InvalidArgument(f"annotation ({s}, {e}) outside recording of {duration:.3f} s")
        if s < prev_end:
            raise InvalidArgument(f"annotation ({s}, {e}) overlaps the previous one")
        prev_end = e


def bandpass_filter(rec: Recording, low_hz: float = 1.0, high_hz: float = 20.0,
                    order: int = 4) -> Recording:
    """Zero-phase (forward-backward) Butterworth band-pass per channel."""
    if not 0 < low_hz < high_hz < rec.sample_rate / 2:
        raise InvalidArgument(f"invalid band [{low_hz}, {high_hz}] Hz at fs={rec.sample_rate}")
    sos = signal.butter(order, [low_hz, high_hz], btype="bandpass", fs=rec.sample_rate, output="sos")
    # same pad length sosfiltfilt uses by default
    settle = 2 * len(sos) + 1 - min((sos[:, 2] == 0).sum(), (sos[:, 5] == 0).sum())
    if rec.samples.shape[0] <= 3 * settle:
        raise DegenerateInputError(f"recording of {rec.samples.shape[0]} samples is shorter "
                                   f"than 3x filter settling length ({settle})")
    out = signal.sosfiltfilt(sos, rec.samples, axis=0)
    return replace(rec, samples=out)


def num_windows(n_samples: int, win: int, step: int) -> int:
    return (n_samples - win) // step + 1


def window_bounds(rec_len_s: float, sample_rate: float, window_len_s: float,
                  step_s: float) -> tuple[int, int, int]:
    win = int(round(window_len_s * sample_rate))
    step = int(round(step_s * sample_rate))
    n = int(round(rec_len_s * sample_rate))
    if win <= 0 or step <= 0:
        raise InvalidArgument("window and step must cover at least one sample")
    if n < win:
        raise InvalidArgument(f"window of {window_len_s} s is longer than the recording ({rec_len_s:.3f} s)")
    return win, step, num_windows(n, win, step)


def _band_masks(freqs: np.ndarray) -> dict[str, np.ndarray]:
    masks = {name: (freqs >= lo) & (freqs < hi) for name, lo, hi in BANDS}
    masks["tot"] = (freqs >= TOTAL_BAND[0]) & (freqs < TOTAL_BAND[1])
    return masks


def window_features(x: np.ndarray, sample_rate: float) -> np.ndarray:
    """Features of a stack of windows.

    ``x`` has shape (..., n_samples); returns (..., NUM_FEATURES).
    """
    x = np.asarray(x, dtype=np.float64)
    n = x.shape[-1]
    mean_ampl = np.abs(x).mean(axis=-1)
    line_length = np.abs(np.diff(x, axis=-1)).sum(axis=-1)

    # mean-removed, rectangular-taper one-sided periodogram (power per bin)
    centered = x - x.mean(axis=-1, keepdims=True)
    spec = np.abs(np.fft.rfft(centered, axis=-1)) ** 2 / (n * n)
    if n % 2 == 0:
        spec[..., 1:-1] *= 2
    else:
        spec[..., 1:] *= 2
    freqs = np.fft.rfftfreq(n, d=1.0 / sample_rate)
    masks = _band_masks(freqs)

    p_tot = spec[..., masks["tot"]].sum(axis=-1)
    absolute = [spec[..., masks[name]].sum(axis=-1) for name, _, _ in BANDS]
    safe_tot = np.where(p_tot > 0, p_tot, 1.0)
    relative = [np.where(p_tot > 0, p / safe_tot, 0.0) for p in absolute]
    return np.stack([mean_ampl, line_length, p_tot, *absolute, *relative], axis=-1)


def window_labels(annotations, n_windows: int, win: int, step: int,
                  sample_rate: float) -> np.ndarray:
    """Label 1 where a seizure covers at least half of the window."""
    labels = np.zeros(n_windows, dtype=np.uint8)
    starts = np.arange(n_windows) * step / sample_rate
    win_s = win / sample_rate
    for s, e in annotations:
        overlap = np.clip(np.minimum(starts + win_s, e) - np.maximum(starts, s), 0, None)
        labels[overlap >= 0.5 * win_s] = 1
    return labels


@dataclass
class FeatureTensor:
    values: np.ndarray  # (window, channel, feature)
    labels: np.ndarray  # (window,)
    feature_names: list[str] = field(default_factory=lambda: list(FEATURE_NAMES))
    channels: list[str] = field(default_factory=list)
    window_len_s: float = 4.0
    step_s: float = 0.5
    bins: np.ndarray | None = None
    norm_params: np.ndarray | None = None  # (channel, feature, 2) of (min, max)
    num_bins: int = 0

    @property
    def n_windows(self) -> int:
        return self.values.shape[0]

    def select_features(self, idx) -> FeatureTensor:
        idx = list(idx)
        return replace(
            self,
            values=self.values[:, :, idx],
            feature_names=[self.feature_names[i] for i in idx],
            bins=None if self.bins is None else self.bins[:, :, idx],
            norm_params=None if self.norm_params is None else self.norm_params[:, idx],
        )

    def save(self, stem: str | Path) -> None:
        """Write ``<stem>.json`` sidecar plus ``<stem>.bin`` payload."""
        stem = Path(stem)
        w, c, f = self.values.shape
        meta = {
            "feature_names": self.feature_names,
            "channels": self.channels,
            "window_len_s": self.window_len_s,
            "step_s": self.step_s,
            "num_bins": self.num_bins,
            "shape": [w, c, f],
            "has_bins": self.bins is not None,
            "norm_params": None if self.norm_params is None else self.norm_params.tolist(),
            "layout": "values f64 (window,channel,feature) | bins u16 same order | labels u8",
        }
        stem.with_suffix(".json").write_text(json.dumps(meta, indent=2) + "\n")
        payload = [np.ascontiguousarray(self.values, dtype="<f8").tobytes()]
        if self.bins is not None:
            payload.append(np.ascontiguousarray(self.bins, dtype="<u2").tobytes())
        payload.append(np.ascontiguousarray(self.labels, dtype=np.uint8).tobytes())
        stem.with_suffix(".bin").write_bytes(b"".join(payload))

    @classmethod
    def load(cls, stem: str | Path) -> FeatureTensor:
        stem = Path(stem)
        meta = json.loads(stem.with_suffix(".json").read_text())
        blob = stem.with_suffix(".bin").read_bytes()
        w, c, f = meta["shape"]
        n = w * c * f
        values = np.frombuffer(blob, "<f8", count=n).reshape(w, c, f).copy()
        off = n * 8
        bins = None
        if meta["has_bins"]:
            bins = np.frombuffer(blob, "<u2", count=n, offset=off).reshape(w, c, f).astype(np.int64)
            off += n * 2
        labels = np.frombuffer(blob, np.uint8, count=w, offset=off).copy()
        norm = meta["norm_params"]
        return cls(values, labels, meta["feature_names"], meta["channels"], meta["window_len_s"],
                   meta["step_s"], bins, None if norm is None else np.asarray(norm, dtype=np.float64),
                   meta["num_bins"])


def extract_features(rec: Recording, window_len_s: float = 4.0, step_s: float = 0.5,
                     feature_names=None) -> FeatureTensor:
    """Slide a window over ``rec`` and compute every feature per channel."""
    win, step, n = window_bounds(rec.duration, rec.sample_rate, window_len_s, step_s)
    # (window, channel, sample) view without copying the signal
    frames = np.lib.stride_tricks.sliding_window_view(rec.samples, win, axis=0)[::step][:n]
    values = window_features(frames, rec.sample_rate)
    labels = window_labels(rec.annotations, n, win, step, rec.sample_rate)
    tensor = FeatureTensor(values, labels, list(FEATURE_NAMES), list(rec.channels), window_len_s, step_s)
    if feature_names is not None:
        tensor = tensor.select_features([FEATURE_NAMES.index(name) for name in feature_names])
    return tensor


def fit_normalization(tensors: FeatureTensor | list[FeatureTensor]) -> np.ndarray:
    """Per (channel, feature) min and max over all training windows."""
    if isinstance(tensors, FeatureTensor):
        tensors = [tensors]
    values = [t.values for t in tensors if t.n_windows]
    if not values:
        raise InvalidArgument("cannot fit normalization on an empty tensor")
    stacked = np.concatenate(values, axis=0)
    if stacked.shape[0] < 2:
        raise InvalidArgument("normalization needs at least 2 windows")
    lo = stacked.min(axis=0)
    hi = stacked.max(axis=0)
    hi = np.where(hi == lo, lo + 1.0, hi)
    return np.stack([lo, hi], axis=-1)


def discretize_values(values: np.ndarray, norm_params: np.ndarray, num_bins: int) -> np.ndarray:
    lo = norm_params[..., 0]
    hi = norm_params[..., 1]
    scaled = np.floor((values - lo) / (hi - lo) * num_bins)
    return np.clip(scaled, 0, num_bins - 1).astype(np.int64)


def discretize(tensor: FeatureTensor, norm_params: np.ndarray | None, num_bins: int = 20) -> FeatureTensor:
    if norm_params is None:
        raise InvalidArgument("discretize requires fitted norm_params")
    if num_bins < 2:
        raise InvalidArgument(f"num_bins must be >= 2, got {num_bins}")
    norm_params = np.asarray(norm_params, dtype=np.float64)
    if norm_params.shape != tensor.values.shape[1:] + (2,):
        raise InvalidArgument(f"norm_params shape {norm_params.shape} does not match "
                              f"tensor {tensor.values.shape[1:]}")
    bins = discretize_values(tensor.values, norm_params, num_bins)
    return replace(tensor, bins=bins, norm_params=norm_params, num_bins=num_bins)


def js_divergence_hist(p: np.ndarray, q: np.ndarray) -> float:
    """Jensen-Shannon divergence (base 2) between two histograms."""
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    p = p / p.sum()
    q = q / q.sum()
    m = 0.5 * (p + q)

    def kl(a, b):
        nz = a > 0
        return float(np.sum(a[nz] * np.log2(a[nz] / b[nz])))

    return max(0.0, 0.5 * kl(p, m) + 0.5 * kl(q, m))


def js_divergence(tensor: FeatureTensor, feature: int) -> tuple[np.ndarray, float]:
    """Seizure vs non-seizure divergence of one feature's bin histogram.

    Returns per-channel values and the value pooled over channels.
    """
    if tensor.bins is None:
        raise InvalidArgument("js_divergence needs a discretized tensor")
    seiz = tensor.labels == 1
    if seiz.all() or not seiz.any():
        raise UndefinedDivergence("both classes must be present")
    nb = tensor.num_bins
    col = tensor.bins[:, :, feature]
    per_ch = np.array([
        js_divergence_hist(np.bincount(col[seiz, c], minlength=nb), np.bincount(col[~seiz, c], minlength=nb))
        for c in range(col.shape[1])
    ])
    pooled = js_divergence_hist(np.bincount(col[seiz].ravel(), minlength=nb),
                                np.bincount(col[~seiz].ravel(), minlength=nb))
    return per_ch, pooled
