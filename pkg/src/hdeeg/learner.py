"""Class-model training (single-pass and OnlineHD) and nearest-model classification."""

from __future__ import annotations

import enum
import json
import struct
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .errors import DegenerateTraining, InvalidArgument, ParseError
from .hdc import Accumulator, Hypervector, hamming_packed, n_words, tiebreak_hv, unpack_bits

SEIZURE = 1
NONSEIZURE = 0


class Mode(str, enum.Enum):
    SINGLEPASS = "singlepass"
    ONLINEHD = "onlinehd"


@dataclass(frozen=True)
class TrainConfig:
    mode: Mode = Mode.SINGLEPASS
    learning_rate: float = 0.5
    epochs: int = 1
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "mode", Mode(self.mode))
        if not 0 < self.learning_rate <= 1:
            raise InvalidArgument(f"learning_rate must be in (0, 1], got {self.learning_rate}")
        if self.epochs < 1:
            raise InvalidArgument(f"epochs must be positive, got {self.epochs}")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["mode"] = self.mode.value
        return d


@dataclass
class ClassModel:
    label: int
    acc: Accumulator
    tiebreak: Hypervector
    count: int = 0
    _hv: Hypervector | None = field(default=None, repr=False)

    @property
    def dim(self) -> int:
        return self.acc.dim

    @property
    def empty(self) -> bool:
        return self.acc.weight_total == 0

    @property
    def hv(self) -> Hypervector:
        if self._hv is None:
            self._hv = self.acc.threshold(self.tiebreak)
        return self._hv

    def absorb(self, bits: np.ndarray, weight: float = 1.0) -> None:
        self.acc.add(bits, weight)
        if weight > 0:
            self.count += 1
        self._hv = None

    def rebinarize(self) -> None:
        self._hv = self.acc.threshold(self.tiebreak)


@dataclass
class Models:
    seizure: ClassModel
    nonseizure: ClassModel
    train_config: TrainConfig = field(default_factory=TrainConfig)
    encoder_digest: str = ""

    @property
    def dim(self) -> int:
        return self.seizure.dim

    def __getitem__(self, label: int) -> ClassModel:
        return self.seizure if label == SEIZURE else self.nonseizure

    def packed(self) -> tuple[np.ndarray, np.ndarray]:
        return self.seizure.hv.words, self.nonseizure.hv.words

    def save(self, path: str | Path) -> None:
        Path(path).write_bytes(dump_models(self))

    @classmethod
    def load(cls, path: str | Path) -> Models:
        return parse_models(Path(path).read_bytes())


def _as_packed(vectors, dim: int | None) -> tuple[np.ndarray, int]:
    if isinstance(vectors, np.ndarray):
        if dim is None:
            raise InvalidArgument("dim is required for packed input")
        if vectors.ndim != 2 or vectors.shape[1] != n_words(dim):
            raise InvalidArgument(f"packed vectors of shape {vectors.shape} do not match dim {dim}")
        return vectors, dim
    vectors = list(vectors)
    if not vectors:
        raise InvalidArgument("no training vectors")
    dim = vectors[0].dim
    if any(v.dim != dim for v in vectors):
        raise InvalidArgument("training vectors have mixed dimensions")
    return np.stack([v.words for v in vectors]), dim


def _empty_models(dim: int, cfg: TrainConfig) -> Models:
    tie = tiebreak_hv(dim, cfg.seed)
    return Models(ClassModel(SEIZURE, Accumulator(dim), tie), ClassModel(NONSEIZURE, Accumulator(dim), tie), cfg)


def train(vectors, labels, cfg: TrainConfig = TrainConfig(), dim: int | None = None,
          encoder_digest: str = "") -> Models:
    """Build seizure and non-seizure models from encoded windows.

    ``vectors`` is a packed (n, n_words) array (``dim`` required) or a
    sequence of :class:`Hypervector`.
    """
    packed, dim = _as_packed(vectors, dim)
    labels = np.asarray(labels).astype(np.int64)
    if packed.shape[0] == 0 or labels.shape[0] != packed.shape[0]:
        raise InvalidArgument("vectors and labels must be non-empty and of equal length")
    if not ((labels == SEIZURE).any() and (labels == NONSEIZURE).any()):
        raise DegenerateTraining("training data must contain both classes")
    models = _empty_models(dim, cfg)
    models.encoder_digest = encoder_digest
    if cfg.mode is Mode.SINGLEPASS:
        _train_singlepass(models, packed, labels, dim)
    else:
        _train_onlinehd(models, packed, labels, dim, cfg)
    return models


def _train_singlepass(models: Models, packed, labels, dim, chunk: int = 512) -> None:
    for label in (SEIZURE, NONSEIZURE):
        rows = packed[labels == label]
        model = models[label]
        for s in range(0, rows.shape[0], chunk):
            model.acc.add_many(unpack_bits(rows[s:s + chunk], dim))
        model.count = rows.shape[0]


def _distance(x: np.ndarray, model: ClassModel) -> float:
    # an empty model carries no information: treat as quasi-orthogonal
    if model.empty:
        return 0.5
    return float(hamming_packed(x, model.hv.words, model.dim))


def _train_onlinehd(models: Models, packed, labels, dim, cfg: TrainConfig) -> None:
    lr = cfg.learning_rate
    for _ in range(cfg.epochs):
        for x, y in zip(packed, labels):
            correct, wrong = models[y], models[1 - y]
            s_correct = 1.0 - _distance(x, correct)
            s_wrong = 1.0 - _distance(x, wrong)
            bits = unpack_bits(x, dim)
            w = lr * (1.0 - s_correct)
            if w > 0:
                correct.absorb(bits, w)
                correct.rebinarize()
            if s_wrong > s_correct:
                wrong.absorb(bits, -lr * (s_wrong - s_correct))
                if not wrong.empty:
                    wrong.rebinarize()


def classify(x: Hypervector, models: Models) -> tuple[int, float, float]:
    """Nearest class model; exact ties go to non-seizure."""
    if x.dim != models.dim:
        raise InvalidArgument(f"dimension mismatch: {x.dim} vs {models.dim}")
    labels, d_s, d_ns = classify_batch(x.words[None, :], models)
    return int(labels[0]), float(d_s[0]), float(d_ns[0])


def classify_batch(packed: np.ndarray, models: Models) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    if packed.shape[-1] != n_words(models.dim):
        raise InvalidArgument("packed vectors do not match the model dimension")
    s, ns = models.packed()
    d_s = hamming_packed(packed, s, models.dim)
    d_ns = hamming_packed(packed, ns, models.dim)
    return (d_s < d_ns).astype(np.uint8), d_s, d_ns


_MAGIC = b"HDMD"
_LEN = struct.Struct("<4sI")


def dump_models(models: Models) -> bytes:
    header = {
        "version": 1,
        "dim": models.dim,
        "train_config": models.train_config.to_dict(),
        "encoder_digest": models.encoder_digest,
        "counts": [models.nonseizure.count, models.seizure.count],
        "weight_totals": [models.nonseizure.acc.weight_total, models.seizure.acc.weight_total],
        "layout": "acc f64[2][dim] (nonseizure, seizure) | hv u64[2][n_words]",
    }
    head = json.dumps(header, sort_keys=True).encode()
    acc = np.stack([models.nonseizure.acc.counts, models.seizure.acc.counts]).astype("<f8")
    hv = np.stack([models.nonseizure.hv.words, models.seizure.hv.words]).astype("<u8")
    return _LEN.pack(_MAGIC, len(head)) + head + acc.tobytes() + hv.tobytes()


def parse_models(blob: bytes) -> Models:
    if len(blob) < _LEN.size:
        raise ParseError("model file truncated at byte 0")
    magic, n = _LEN.unpack_from(blob)
    if magic != _MAGIC:
        raise ParseError(f"bad model magic {magic!r} at byte 0")
    try:
        header = json.loads(blob[_LEN.size:_LEN.size + n])
    except ValueError as exc:
        raise ParseError(f"bad model header at byte {_LEN.size}: {exc}") from None
    dim = header["dim"]
    off = _LEN.size + n
    nw = n_words(dim)
    if len(blob) != off + 2 * dim * 8 + 2 * nw * 8:
        raise ParseError(f"model payload size mismatch after byte {off}")
    acc = np.frombuffer(blob, "<f8", count=2 * dim, offset=off).reshape(2, dim)
    hv = np.frombuffer(blob, "<u8", count=2 * nw, offset=off + 2 * dim * 8).reshape(2, nw)
    cfg = TrainConfig(**header["train_config"])
    models = _empty_models(dim, cfg)
    models.encoder_digest = header["encoder_digest"]
    for label in (NONSEIZURE, SEIZURE):
        m = models[label]
        m.acc.counts = acc[label].copy()
        m.acc.weight_total = header["weight_totals"][label]
        m.count = header["counts"][label]
        m._hv = Hypervector(hv[label], dim)
    return models


def check_encoder(models: Models, digest: str) -> None:
    if models.encoder_digest and digest and models.encoder_digest != digest:
        raise InvalidArgument(f"model was trained with encoder {models.encoder_digest}, not {digest}")
