"""Recording formats, dataset manifests, synthetic data and fold-file selection."""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import struct
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, InsufficientData, InvalidArgument, ParseError
from .features import FeatureTensor, Recording, check_annotations

log = logging.getLogger(__name__)

_SIG_MAGIC = b"HDSG"
_SIG_VERSION = 1
_SIG_HEAD = struct.Struct("<4sHdIQ")
TIME_COLUMNS = {"time", "time_s", "t"}


# -- annotations -------------------------------------------------------------

def read_annotations(path: str | Path) -> list[tuple[float, float]]:
    """Parse ``start_s,end_s`` lines; blank lines and ``#`` comments are skipped."""
    out = []
    prev_end = -math.inf
    text = Path(path).read_text()
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split(",")
        try:
            s, e = float(parts[0]), float(parts[1])
        except (ValueError, IndexError):
            if lineno == 1 and not parts[0].replace(".", "", 1).isdigit():
                continue  # header row
            raise ParseError(f"{path}:{lineno}: expected 'start_s,end_s', got {line!r}") from None
        if not (math.isfinite(s) and math.isfinite(e)):
            raise ParseError(f"{path}:{lineno}: non-finite annotation time")
        if s >= e:
            raise ParseError(f"{path}:{lineno}: annotation start {s} >= end {e}")
        if s < prev_end:
            raise ParseError(f"{path}:{lineno}: annotations not monotone (starts at {s} before {prev_end})")
        prev_end = e
        out.append((s, e))
    return out


def write_annotations(path: str | Path, annotations) -> None:
    Path(path).write_text("".join(f"{s!r},{e!r}\n" for s, e in annotations))


# -- signal files ------------------------------------------------------------

def write_rawbin(path: str | Path, rec: Recording) -> None:
    samples = np.asarray(rec.samples, dtype="<f4")
    names = b"".join(struct.pack("<H", len(n.encode())) + n.encode() for n in rec.channels)
    head = _SIG_HEAD.pack(_SIG_MAGIC, _SIG_VERSION, float(rec.sample_rate), len(rec.channels), samples.shape[0])
    # channel-major blocks
    Path(path).write_bytes(head + names + np.ascontiguousarray(samples.T).tobytes())


def read_rawbin(path: str | Path) -> tuple[float, list[str], np.ndarray]:
    blob = Path(path).read_bytes()
    if len(blob) < _SIG_HEAD.size:
        raise ParseError(f"{path}: truncated header at byte {len(blob)}")
    magic, version, fs, n_ch, n_samp = _SIG_HEAD.unpack_from(blob)
    if magic != _SIG_MAGIC:
        raise ParseError(f"{path}: bad magic {magic!r} at byte 0")
    if version != _SIG_VERSION:
        raise ParseError(f"{path}: unsupported version {version} at byte 4")
    if not fs > 0:
        raise ParseError(f"{path}: non-positive sample rate at byte 6")
    off = _SIG_HEAD.size
    names = []
    for _ in range(n_ch):
        if off + 2 > len(blob):
            raise ParseError(f"{path}: channel-name table truncated at byte {off}")
        (n,) = struct.unpack_from("<H", blob, off)
        off += 2
        try:
            names.append(blob[off:off + n].decode())
        except UnicodeDecodeError:
            raise ParseError(f"{path}: bad channel name at byte {off}") from None
        off += n
    expected = off + 4 * n_ch * n_samp
    if len(blob) != expected:
        raise ParseError(f"{path}: payload is {len(blob) - off} bytes from byte {off}, "
                         f"expected {4 * n_ch * n_samp}")
    data = np.frombuffer(blob, "<f4", offset=off).reshape(n_ch, n_samp).T.copy()
    bad = np.argwhere(np.isnan(data))
    if bad.size:
        t, c = bad[0]
        raise ParseError(f"{path}: NaN sample at byte {off + 4 * (c * n_samp + t)}")
    return fs, names, data


def write_csv(path: str | Path, rec: Recording) -> None:
    samples = np.asarray(rec.samples, dtype=np.float32)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["time_s", *rec.channels])
    for i, row in enumerate(samples):
        w.writerow([repr(i / rec.sample_rate), *(repr(float(v)) for v in row)])
    Path(path).write_text(buf.getvalue())


def read_csv(path: str | Path) -> tuple[list[str], np.ndarray]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}:1: empty file") from None
        has_time = header[0].strip().lower() in TIME_COLUMNS
        names = [h.strip() for h in (header[1:] if has_time else header)]
        if not names:
            raise ParseError(f"{path}:1: no channel columns")
        rows = []
        for lineno, row in enumerate(reader, 2):
            if not row:
                continue
            vals = row[1:] if has_time else row
            if len(vals) != len(names):
                raise ParseError(f"{path}:{lineno}: expected {len(names)} values, got {len(vals)}")
            try:
                parsed = [float(v) for v in vals]
            except ValueError:
                raise ParseError(f"{path}:{lineno}: non-numeric sample") from None
            if any(math.isnan(v) for v in parsed):
                raise ParseError(f"{path}:{lineno}: NaN sample")
            rows.append(parsed)
    return names, np.asarray(rows, dtype=np.float32).reshape(-1, len(names))


def load_recording(signal_path: str | Path, annotation_path: str | Path | None = None,
                   fmt: str = "rawbin", sample_rate: float | None = None,
                   min_duration_s: float = 0.0) -> Recording:
    if fmt == "rawbin":
        fs, names, data = read_rawbin(signal_path)
        if sample_rate is not None and abs(sample_rate - fs) > 1e-9:
            raise ParseError(f"{signal_path}: header sample rate {fs} != manifest {sample_rate}")
    elif fmt == "csv":
        if sample_rate is None:
            raise ConfigError("csv recordings need a sample_rate")
        fs = sample_rate
        names, data = read_csv(signal_path)
    else:
        raise ConfigError(f"unknown recording format {fmt!r}")
    ann = read_annotations(annotation_path) if annotation_path else []
    duration = data.shape[0] / fs
    if duration < min_duration_s:
        raise ParseError(f"{signal_path}: recording of {duration:.3f} s is shorter than "
                         f"one {min_duration_s} s analysis window")
    try:
        return Recording(fs, names, data, ann)
    except InvalidArgument as exc:
        raise ParseError(f"{annotation_path}: {exc}") from None


def save_recording(rec: Recording, signal_path: str | Path, annotation_path: str | Path,
                   fmt: str = "rawbin") -> None:
    if fmt == "rawbin":
        write_rawbin(signal_path, rec)
    elif fmt == "csv":
        write_csv(signal_path, rec)
    else:
        raise ConfigError(f"unknown recording format {fmt!r}")
    write_annotations(annotation_path, rec.annotations)


# -- manifests ---------------------------------------------------------------

@dataclass
class RecordingEntry:
    signal_path: str
    annotation_path: str
    sample_rate: float
    channel_names: list[str]


@dataclass
class Subject:
    id: str
    recordings: list[RecordingEntry] = field(default_factory=list)


@dataclass
class DatasetManifest:
    subjects: list[Subject]
    format: str = "rawbin"
    root: Path | None = None

    def to_json(self) -> str:
        return json.dumps({"format": self.format, "subjects": [asdict(s) for s in self.subjects]}, indent=2) + "\n"

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json())

    @classmethod
    def load(cls, path: str | Path) -> DatasetManifest:
        path = Path(path)
        try:
            raw = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}:{exc.lineno}: {exc.msg}") from None
        try:
            subjects = [Subject(s["id"], [RecordingEntry(**r) for r in s["recordings"]]) for s in raw["subjects"]]
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"{path}: malformed manifest ({exc})") from None
        for s in subjects:
            if len({len(r.channel_names) for r in s.recordings}) > 1:
                raise ConfigError(f"{path}: subject {s.id} mixes channel counts")
        return cls(subjects, raw.get("format", "rawbin"), path.parent)

    def resolve(self, p: str) -> Path:
        q = Path(p)
        return q if q.is_absolute() or self.root is None else self.root / q

    def load_subject(self, subject: Subject, min_duration_s: float = 0.0) -> list[Recording]:
        return [load_recording(self.resolve(r.signal_path), self.resolve(r.annotation_path), self.format,
                               r.sample_rate, min_duration_s) for r in subject.recordings]


# -- synthetic recordings ----------------------------------------------------

@dataclass
class SynthSpec:
    """Planted-effect EEG-like dataset description.

    ``effects`` entries are dicts with a ``type`` of ``amplitude``
    (``factor``) or ``sinusoid`` (``freq_hz``, ``amplitude_uv``); they apply
    to ``informative_channels`` during seizures only.
    """

    num_subjects: int = 1
    num_channels: int = 18
    sample_rate: float = 256.0
    num_seizure_files: int = 4
    num_free_files: int = 2
    duration_s: float = 300.0
    free_duration_s: float = 900.0
    seizure_len_s: tuple[float, float] = (20.0, 40.0)
    effects: list[dict] = field(default_factory=lambda: [{"type": "amplitude", "factor": 3.0},
                                                        {"type": "sinusoid", "freq_hz": 5.0, "amplitude_uv": 20.0}])
    informative_channels: list[int] = field(default_factory=lambda: [0, 1, 2])
    background_uv: float = 20.0
    gain_drift: float = 0.3
    gain_timescale_s: float = 20.0
    seed: int = 1
    format: str = "rawbin"
    allow_null: bool = False

    def __post_init__(self):
        self.seizure_len_s = tuple(self.seizure_len_s)
        if not self.effects and not self.allow_null:
            raise ConfigError("effects list is empty: the dataset would be unlearnable "
                              "(pass --allow-null for a chance-level control)")
        if any(not 0 <= c < self.num_channels for c in self.informative_channels):
            raise ConfigError("informative channel index out of range")
        lo, hi = self.seizure_len_s
        if not 0 < lo <= hi < self.duration_s:
            raise ConfigError(f"seizure_len_s {self.seizure_len_s} does not fit in {self.duration_s} s files")
        for e in self.effects:
            if e.get("type") not in ("amplitude", "sinusoid"):
                raise ConfigError(f"unknown effect {e!r}")
        if self.num_subjects < 1 or self.num_channels < 1 or self.sample_rate <= 0:
            raise ConfigError("num_subjects, num_channels and sample_rate must be positive")

    @classmethod
    def from_json(cls, text: str, source: str = "<spec>", allow_null: bool = False) -> SynthSpec:
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{source}:{exc.lineno}: {exc.msg}") from None
        if allow_null and isinstance(raw, dict):
            raw["allow_null"] = True
        try:
            return cls(**raw)
        except TypeError as exc:
            raise ConfigError(f"{source}: {exc}") from None

    def to_dict(self) -> dict:
        d = asdict(self)
        d["seizure_len_s"] = list(self.seizure_len_s)
        return d


def channel_names(n: int) -> list[str]:
    bipolar = ["FP1-F7", "F7-T7", "T7-P7", "P7-O1", "FP1-F3", "F3-C3", "C3-P3", "P3-O1", "FP2-F4",
               "F4-C4", "C4-P4", "P4-O2", "FP2-F8", "F8-T8", "T8-P8", "P8-O2", "FZ-CZ", "CZ-PZ"]
    return bipolar[:n] if n <= len(bipolar) else [f"CH{i:02d}" for i in range(n)]


def pink_noise(rng: np.random.Generator, n: int, n_ch: int, fs: float) -> np.ndarray:
    """Unit-variance noise with a 1/f power spectrum, band-limited to [0.5, 45] Hz."""
    spec = rng.standard_normal((n // 2 + 1, n_ch)) + 1j * rng.standard_normal((n // 2 + 1, n_ch))
    f = np.fft.rfftfreq(n, 1.0 / fs)
    shape = np.zeros_like(f)
    band = (f >= 0.5) & (f <= 45.0)
    shape[band] = 1.0 / np.sqrt(f[band])
    x = np.fft.irfft(spec * shape[:, None], n=n, axis=0)
    return x / x.std(axis=0, keepdims=True)


def slow_gain(rng: np.random.Generator, n: int, n_ch: int, fs: float, drift: float,
              timescale_s: float) -> np.ndarray:
    """Log-normal per-channel gain wandering on a ``timescale_s`` scale."""
    if drift <= 0:
        return np.ones((n, n_ch))
    step = max(1, int(fs * timescale_s / 4))
    knots = rng.standard_normal((n // step + 2, n_ch))
    t = np.arange(n) / step
    idx = np.arange(knots.shape[0])
    walk = np.stack([np.interp(t, idx, knots[:, c]) for c in range(n_ch)], axis=1)
    return np.exp(drift * walk)


def synth_recording(spec: SynthSpec, rng: np.random.Generator, duration_s: float,
                    seizures: list[tuple[float, float]]) -> Recording:
    fs = spec.sample_rate
    n = int(round(duration_s * fs))
    C = spec.num_channels
    x = pink_noise(rng, n, C, fs) * slow_gain(rng, n, C, fs, spec.gain_drift, spec.gain_timescale_s)
    x *= spec.background_uv
    t = np.arange(n) / fs
    inf = spec.informative_channels
    for s, e in seizures:
        a, b = int(round(s * fs)), int(round(e * fs))
        for eff in spec.effects:
            if eff["type"] == "amplitude":
                x[a:b, inf] *= eff["factor"]
            else:
                phase = rng.uniform(0, 2 * np.pi, len(inf))
                x[a:b, inf] += eff["amplitude_uv"] * np.sin(2 * np.pi * eff["freq_hz"] * t[a:b, None] + phase)
    return Recording(fs, channel_names(C), x.astype(np.float32), seizures)


def generate_synthetic(spec: SynthSpec, out_dir: str | Path) -> DatasetManifest:
    """Write every subject's recordings plus ``manifest.json`` under ``out_dir``."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    ext = "bin" if spec.format == "rawbin" else "csv"
    subjects = []
    for si in range(spec.num_subjects):
        rng = np.random.default_rng(np.random.SeedSequence(spec.seed, spawn_key=(si,)))
        sid = f"s{si + 1:02d}"
        sdir = out_dir / sid
        sdir.mkdir(exist_ok=True)
        entries = []
        files = [("sz", i, spec.duration_s) for i in range(spec.num_seizure_files)]
        files += [("free", i, spec.free_duration_s) for i in range(spec.num_free_files)]
        for kind, i, dur in files:
            seizures = []
            if kind == "sz":
                length = rng.uniform(*spec.seizure_len_s)
                if 0.8 * dur - length > 0.2 * dur:
                    start = rng.uniform(0.2 * dur, 0.8 * dur - length)
                else:
                    start = (dur - length) / 2
                seizures = [(round(start, 3), round(start + length, 3))]
            rec = synth_recording(spec, rng, dur, seizures)
            name = f"{sid}_{kind}{i:02d}"
            save_recording(rec, sdir / f"{name}.{ext}", sdir / f"{name}.ann.csv", spec.format)
            entries.append(RecordingEntry(f"{sid}/{name}.{ext}", f"{sid}/{name}.ann.csv", spec.sample_rate,
                                          rec.channels))
        subjects.append(Subject(sid, entries))
    manifest = DatasetManifest(subjects, spec.format, out_dir)
    manifest.save(out_dir / "manifest.json")
    (out_dir / "synth-spec.json").write_text(json.dumps(spec.to_dict(), indent=2) + "\n")
    return manifest


# -- fold files --------------------------------------------------------------

@dataclass
class FoldFile:
    name: str
    recording: Recording
    source: str
    degenerate: bool = False


def _free_gaps(length: int, used: list[tuple[int, int]]) -> list[tuple[int, int]]:
    gaps, pos = [], 0
    for a, b in sorted(used):
        if a > pos:
            gaps.append((pos, a))
        pos = max(pos, b)
    if pos < length:
        gaps.append((pos, length))
    return gaps


def select_data(recordings: list[Recording], ratio: float = 10.0, seed: int = 0,
                names: list[str] | None = None) -> list[FoldFile]:
    """One fold file per seizure: the seizure framed by non-seizure data.

    Non-seizure data totals ``ratio`` times the seizure duration, half placed
    before and half after the seizure, each half a contiguous chunk cut from
    a randomly chosen seizure-free recording. Chunks are never reused.
    """
    if ratio < 0:
        raise InvalidArgument("ratio must be non-negative")
    names = names or [f"rec{i:02d}" for i in range(len(recordings))]
    rng = np.random.default_rng(seed)
    free = [i for i, r in enumerate(recordings) if not r.annotations]
    used: dict[int, list[tuple[int, int]]] = {i: [] for i in free}
    folds = []
    for i, rec in enumerate(recordings):
        fs = rec.sample_rate
        for k, (s, e) in enumerate(rec.annotations):
            a, b = int(round(s * fs)), int(round(e * fs))
            n_ns = int(round(ratio * (b - a)))
            pre_n, post_n = n_ns // 2, n_ns - n_ns // 2
            chunks = [_take_chunk(recordings, free, used, n, rng, fs) for n in (pre_n, post_n)]
            samples = np.concatenate([chunks[0], rec.samples[a:b], chunks[1]])
            start = pre_n / fs
            fold = Recording(fs, list(rec.channels), samples, [(start, start + (b - a) / fs)])
            degenerate = n_ns == 0
            if degenerate:
                log.warning("fold %s_%d is seizure-only (ratio 0)", names[i], k)
            folds.append(FoldFile(f"{names[i]}_sz{k}", fold, names[i], degenerate))
    return folds


def _take_chunk(recordings, free, used, n, rng, fs) -> np.ndarray:
    ch = recordings[free[0]].samples.shape[1] if free else recordings[0].samples.shape[1]
    if n == 0:
        return np.zeros((0, ch), dtype=recordings[0].samples.dtype)
    options = []
    for i in free:
        for g0, g1 in _free_gaps(recordings[i].samples.shape[0], used[i]):
            if g1 - g0 >= n:
                options.append((i, g0, g1))
    if not options:
        avail = sum(g1 - g0 for i in free for g0, g1 in _free_gaps(recordings[i].samples.shape[0], used[i]))
        raise InsufficientData(f"need a contiguous non-seizure chunk of {n / fs:.1f} s, "
                               f"only {avail / fs:.1f} s of unused seizure-free data left")
    i, g0, g1 = options[int(rng.integers(len(options)))]
    start = int(rng.integers(g0, g1 - n + 1))
    used[i].append((start, start + n))
    return recordings[i].samples[start:start + n]


# -- synthetic feature tensors -----------------------------------------------

def synthetic_feature_folds(num_folds: int = 4, num_ch: int = 4, num_feat: int = 19,
                            effects: dict[int, float] | None = None, duplicates: dict[int, int] | None = None,
                            seizure_windows: tuple[int, int] = (60, 100), ratio: float = 10.0,
                            smooth: float = 0.9, channels: list[int] | None = None, seed: int = 0,
                            step_s: float = 0.5) -> list[FeatureTensor]:
    """Feature tensors with class signal planted directly in chosen features.

    ``effects`` maps feature index to the seizure-time mean shift (in noise
    standard deviations) applied on ``channels`` (default: all); every other
    feature is class-independent AR(1) noise. ``duplicates`` maps a feature
    to the feature whose values it copies exactly.
    """
    effects = effects or {}
    duplicates = duplicates or {}
    rng = np.random.default_rng(seed)
    channels = list(range(num_ch)) if channels is None else channels
    folds = []
    for _ in range(num_folds):
        n_sz = int(rng.integers(seizure_windows[0], seizure_windows[1] + 1))
        n_ns = int(round(ratio * n_sz))
        pre = n_ns // 2
        W = n_sz + n_ns
        labels = np.zeros(W, dtype=np.uint8)
        labels[pre:pre + n_sz] = 1
        eps = rng.standard_normal((W, num_ch, num_feat))
        vals = np.empty_like(eps)
        vals[0] = eps[0]
        k = math.sqrt(1 - smooth ** 2)
        for w in range(1, W):
            vals[w] = smooth * vals[w - 1] + k * eps[w]
        idx = np.flatnonzero(labels == 1)
        for f, shift in effects.items():
            vals[np.ix_(idx, channels, [f])] += shift
        for f, src in duplicates.items():
            vals[:, :, f] = vals[:, :, src]
        folds.append(FeatureTensor(vals, labels, [f"feat{f:02d}" for f in range(num_feat)],
                                   [f"ch{c}" for c in range(num_ch)], 4.0, step_s))
    return folds
