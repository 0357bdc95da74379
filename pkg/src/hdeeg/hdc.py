"""Binary hypervector algebra on bit-packed uint64 words.

Bit ``i`` of a vector lives in word ``i // 64`` at position ``i % 64``
(little-endian bit order), so ``np.unpackbits(words.view(np.uint8),
bitorder="little")`` recovers the per-bit view on any host.
"""

from __future__ import annotations

import enum
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import InvalidArgument

WORD_BITS = 64
DEFAULT_DIM = 19000

# Philox4x64 behind numpy's SeedSequence; stored in item-memory headers.
PRNG_ID = 0x50484C58  # "PHLX"
TIEBREAK_KIND = 255


class MemoryKind(enum.IntEnum):
    FEATURE_IDS = 0
    CHANNEL_IDS = 1
    FEAT_CH_COMBO_IDS = 2
    LEVEL_VALUES = 3


def n_words(dim: int) -> int:
    return (dim + WORD_BITS - 1) // WORD_BITS


def pack_bits(bits: np.ndarray) -> np.ndarray:
    """Pack a (..., dim) array of 0/1 values into (..., n_words) uint64."""
    bits = np.asarray(bits, dtype=np.uint8)
    dim = bits.shape[-1]
    pad = n_words(dim) * WORD_BITS - dim
    if pad:
        bits = np.concatenate([bits, np.zeros(bits.shape[:-1] + (pad,), np.uint8)], axis=-1)
    packed = np.packbits(bits, axis=-1, bitorder="little")
    return np.ascontiguousarray(packed).view("<u8")


def unpack_bits(words: np.ndarray, dim: int) -> np.ndarray:
    """Inverse of :func:`pack_bits`; returns uint8 0/1 of shape (..., dim)."""
    words = np.ascontiguousarray(words, dtype="<u8")
    bits = np.unpackbits(words.view(np.uint8), axis=-1, bitorder="little")
    return np.ascontiguousarray(bits[..., :dim])


def _tail_mask(dim: int) -> np.uint64:
    r = dim % WORD_BITS
    return np.uint64((1 << r) - 1) if r else np.uint64(0xFFFFFFFFFFFFFFFF)


class Hypervector:
    """Immutable binary hypervector of ``dim`` bits."""

    __slots__ = ("dim", "words")

    def __init__(self, words: np.ndarray, dim: int):
        if dim <= 0:
            raise InvalidArgument(f"dim must be positive, got {dim}")
        words = np.array(words, dtype="<u8", copy=True).reshape(-1)
        if words.shape[0] != n_words(dim):
            raise InvalidArgument(f"expected {n_words(dim)} words for dim {dim}, got {words.shape[0]}")
        words[-1] &= _tail_mask(dim)
        words.flags.writeable = False
        self.words = words
        self.dim = dim

    @classmethod
    def from_bits(cls, bits: Sequence[int] | np.ndarray) -> Hypervector:
        bits = np.asarray(bits, dtype=np.uint8)
        if bits.ndim != 1 or bits.size == 0:
            raise InvalidArgument("bits must be a non-empty 1-D sequence")
        if np.any(bits > 1):
            raise InvalidArgument("bits must be 0 or 1")
        return cls(pack_bits(bits), bits.size)

    @classmethod
    def zeros(cls, dim: int) -> Hypervector:
        return cls(np.zeros(n_words(dim), "<u8"), dim)

    def bits(self) -> np.ndarray:
        return unpack_bits(self.words, self.dim)

    def complement(self) -> Hypervector:
        return Hypervector(~self.words, self.dim)

    def __xor__(self, other: Hypervector) -> Hypervector:
        return bind(self, other)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Hypervector):
            return NotImplemented
        return self.dim == other.dim and bool(np.array_equal(self.words, other.words))

    def __hash__(self) -> int:
        return hash((self.dim, self.words.tobytes()))

    def __len__(self) -> int:
        return self.dim

    def __repr__(self) -> str:
        return f"Hypervector(dim={self.dim}, ones={int(np.bitwise_count(self.words).sum())})"


def item_rng(seed: int, kind: int, index: int = 0) -> np.random.Generator:
    """Generator for entry ``index`` of item memory ``kind`` under ``seed``."""
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(kind), int(index)))
    return np.random.Generator(np.random.Philox(ss))


def random_hv(dim: int, rng: np.random.Generator) -> Hypervector:
    """Draw a hypervector with i.i.d. Bernoulli(0.5) bits."""
    if dim <= 0:
        raise InvalidArgument(f"dim must be positive, got {dim}")
    words = rng.integers(0, np.iinfo(np.uint64).max, size=n_words(dim), dtype=np.uint64, endpoint=True)
    return Hypervector(words, dim)


def tiebreak_hv(dim: int, seed: int = 0) -> Hypervector:
    """Fixed vector deciding bits where a bundle vote is exactly split."""
    return random_hv(dim, item_rng(seed, TIEBREAK_KIND, dim))


def _check_dims(a: Hypervector, b: Hypervector) -> None:
    if a.dim != b.dim:
        raise InvalidArgument(f"dimension mismatch: {a.dim} vs {b.dim}")


def bind(a: Hypervector, b: Hypervector) -> Hypervector:
    _check_dims(a, b)
    return Hypervector(np.bitwise_xor(a.words, b.words), a.dim)


def hamming(a: Hypervector, b: Hypervector) -> float:
    """Normalized Hamming distance in [0, 1]."""
    _check_dims(a, b)
    return int(np.bitwise_count(a.words ^ b.words).sum()) / a.dim


def hamming_packed(x: np.ndarray, y: np.ndarray, dim: int) -> np.ndarray:
    """Row-wise normalized Hamming distance between packed word arrays."""
    return np.bitwise_count(np.bitwise_xor(x, y)).sum(axis=-1) / dim


def slice_hv(hv: Hypervector, start: int, end: int) -> Hypervector:
    if not (0 <= start < end <= hv.dim):
        raise InvalidArgument(f"invalid slice [{start}, {end}) of dim {hv.dim}")
    return Hypervector.from_bits(hv.bits()[start:end])


def concat(parts: Iterable[Hypervector]) -> Hypervector:
    parts = list(parts)
    if not parts:
        raise InvalidArgument("nothing to concatenate")
    return Hypervector.from_bits(np.concatenate([p.bits() for p in parts]))


class Accumulator:
    """Bipolar running sum used by bundling.

    ``counts[i]`` holds ``sum_k w_k * (2 v_k[i] - 1)``, so ``counts[i] > 0``
    is the same test as ``sum_k w_k v_k[i] > weight_total / 2`` for
    non-negative weights.
    """

    def __init__(self, dim: int):
        if dim <= 0:
            raise InvalidArgument(f"dim must be positive, got {dim}")
        self.dim = dim
        self.counts = np.zeros(dim, dtype=np.float64)
        self.weight_total = 0.0

    def add(self, hv: Hypervector | np.ndarray, weight: float = 1.0) -> None:
        """Add ``hv`` with ``weight``; a negative weight subtracts it."""
        bits = hv.bits() if isinstance(hv, Hypervector) else np.asarray(hv)
        if bits.shape[-1] != self.dim:
            raise InvalidArgument(f"dimension mismatch: {bits.shape[-1]} vs {self.dim}")
        if weight == 0:
            return
        self.counts += weight * (2.0 * bits - 1.0)
        self.weight_total += abs(weight)

    def add_many(self, bits: np.ndarray) -> None:
        """Add each row of an unpacked (n, dim) 0/1 array with unit weight."""
        bits = np.asarray(bits)
        if bits.ndim != 2 or bits.shape[1] != self.dim:
            raise InvalidArgument(f"expected (n, {self.dim}) bits, got {bits.shape}")
        ones = bits.sum(axis=0, dtype=np.int64)
        self.counts += 2.0 * ones - bits.shape[0]
        self.weight_total += bits.shape[0]

    def merge(self, other: Accumulator) -> None:
        if other.dim != self.dim:
            raise InvalidArgument(f"dimension mismatch: {other.dim} vs {self.dim}")
        self.counts += other.counts
        self.weight_total += other.weight_total

    def threshold_bits(self, tiebreak: Hypervector) -> np.ndarray:
        if self.weight_total == 0:
            raise InvalidArgument("cannot threshold an empty accumulator")
        if tiebreak.dim != self.dim:
            raise InvalidArgument(f"tie-break dim {tiebreak.dim} != {self.dim}")
        out = (self.counts > 0).astype(np.uint8)
        ties = self.counts == 0
        out[ties] = tiebreak.bits()[ties]
        return out

    def threshold(self, tiebreak: Hypervector) -> Hypervector:
        return Hypervector(pack_bits(self.threshold_bits(tiebreak)), self.dim)

    def copy(self) -> Accumulator:
        acc = Accumulator(self.dim)
        acc.counts = self.counts.copy()
        acc.weight_total = self.weight_total
        return acc


def bundle_threshold(
    vectors: Sequence[Hypervector | tuple[Hypervector, float]],
    tiebreak: Hypervector | None = None,
) -> Hypervector:
    """Weighted bitwise majority of ``vectors``.

    Items are hypervectors (unit weight) or ``(hv, weight)`` pairs. Exact
    ties take the bit of ``tiebreak`` (default: :func:`tiebreak_hv`).
    """
    if not vectors:
        raise InvalidArgument("cannot bundle an empty list")
    items = [v if isinstance(v, tuple) else (v, 1.0) for v in vectors]
    dim = items[0][0].dim
    if any(w < 0 for _, w in items) or not any(w > 0 for _, w in items):
        raise InvalidArgument("weights must be non-negative with at least one positive")
    acc = Accumulator(dim)
    for hv, w in items:
        if hv.dim != dim:
            raise InvalidArgument(f"dimension mismatch: {hv.dim} vs {dim}")
        acc.add(hv, w)
    return acc.threshold(tiebreak if tiebreak is not None else tiebreak_hv(dim))


@dataclass(frozen=True)
class ItemMemory:
    """Seeded table of hypervectors stored as packed rows."""

    kind: MemoryKind
    dim: int
    words: np.ndarray = field(repr=False)
    seed: int
    num_bins: int = 0
    prng_id: int = PRNG_ID

    def __post_init__(self):
        if self.words.ndim != 2 or self.words.shape[1] != n_words(self.dim):
            raise InvalidArgument(f"bad item-memory shape {self.words.shape} for dim {self.dim}")
        self.words.flags.writeable = False

    def __len__(self) -> int:
        return self.words.shape[0]

    def __getitem__(self, i: int) -> Hypervector:
        return Hypervector(self.words[i], self.dim)

    @property
    def entries(self) -> list[Hypervector]:
        return [self[i] for i in range(len(self))]

    def bits(self) -> np.ndarray:
        return unpack_bits(self.words, self.dim)

    @property
    def memory_bits(self) -> int:
        return len(self) * self.dim

    def save(self, path: str | Path) -> None:
        Path(path).write_bytes(dump_item_memory(self))

    @classmethod
    def load(cls, path: str | Path) -> ItemMemory:
        return parse_item_memory(Path(path).read_bytes())


def make_item_memory(kind: MemoryKind, dim: int, count: int, seed: int) -> ItemMemory:
    """Independent random entries; entry ``i`` depends only on (seed, kind, i)."""
    if count <= 0:
        raise InvalidArgument(f"count must be positive, got {count}")
    rows = [random_hv(dim, item_rng(seed, kind, i)).words for i in range(count)]
    return ItemMemory(MemoryKind(kind), dim, np.stack(rows), seed)


def make_level_memory(dim: int, num_bins: int, seed: int, index: int = 0) -> ItemMemory:
    """Level vectors with similarity decreasing linearly in level distance.

    Consecutive levels differ by a fresh disjoint block of
    ``dim // (2 * (num_bins - 1))`` flipped positions, so the two extreme
    levels differ in about half the bits.
    """
    if num_bins < 2:
        raise InvalidArgument(f"num_bins must be >= 2, got {num_bins}")
    if dim < num_bins:
        raise InvalidArgument(f"dim ({dim}) must be >= num_bins ({num_bins})")
    rng = item_rng(seed, MemoryKind.LEVEL_VALUES, index)
    bits = random_hv(dim, rng).bits().copy()
    order = rng.permutation(dim)
    block = dim // (2 * (num_bins - 1))
    rows = [bits.copy()]
    for k in range(num_bins - 1):
        bits[order[k * block:(k + 1) * block]] ^= 1
        rows.append(bits.copy())
    return ItemMemory(MemoryKind.LEVEL_VALUES, dim, pack_bits(np.stack(rows)), seed, num_bins)


_HEADER = struct.Struct("<4sHBIIIQI")
_MAGIC = b"HDIM"
_VERSION = 1


def dump_item_memory(mem: ItemMemory) -> bytes:
    header = _HEADER.pack(_MAGIC, _VERSION, int(mem.kind), mem.dim, len(mem), mem.num_bins,
                          mem.seed & 0xFFFFFFFFFFFFFFFF, mem.prng_id)
    return header + np.ascontiguousarray(mem.words, dtype="<u8").tobytes()


def parse_item_memory(blob: bytes) -> ItemMemory:
    if len(blob) < _HEADER.size:
        raise InvalidArgument("item-memory blob shorter than header")
    magic, version, kind, dim, count, num_bins, seed, prng_id = _HEADER.unpack_from(blob)
    if magic != _MAGIC:
        raise InvalidArgument(f"bad magic {magic!r}")
    if version != _VERSION:
        raise InvalidArgument(f"unsupported item-memory version {version}")
    expected = _HEADER.size + count * n_words(dim) * 8
    if len(blob) != expected:
        raise InvalidArgument(f"item-memory blob is {len(blob)} bytes, expected {expected}")
    words = np.frombuffer(blob, dtype="<u8", offset=_HEADER.size).reshape(count, n_words(dim)).copy()
    return ItemMemory(MemoryKind(kind), dim, words, seed, num_bins, prng_id)
