"""Window encoders mapping a (channel x feature) bin matrix to one hypervector.

Five schemes differ in how feature identity, channel identity and value
levels are bound and bundled:

========================  ====================================================
``feat-x-val``            bundle of FeatID[f] ^ Level[v] over all (ch, f)
``chfeatcomb-x-val``      bundle of FeatChID[ch, f] ^ Level[v]
``feat-x-ch-x-val``       bundle over f of FeatID[f] ^ (bundle over ch of ChID ^ Level)
``ch-x-feat-x-val``       bundle over ch of ChID[ch] ^ (bundle over f of FeatID ^ Level)
``feat-append``           per-feature bundles of ChID ^ Level at dim D // numFeat, concatenated
========================  ====================================================
"""

from __future__ import annotations

import enum
import hashlib
import json
from dataclasses import asdict, dataclass

import numpy as np
from numba import njit

from .errors import InvalidArgument
from .hdc import (DEFAULT_DIM, Hypervector, ItemMemory, MemoryKind, bind, bundle_threshold,
                  concat, make_item_memory, make_level_memory, pack_bits, tiebreak_hv)


class Scheme(str, enum.Enum):
    FEAT_X_VAL = "feat-x-val"
    CHFEATCOMB_X_VAL = "chfeatcomb-x-val"
    FEAT_X_CH_X_VAL = "feat-x-ch-x-val"
    CH_X_FEAT_X_VAL = "ch-x-feat-x-val"
    FEAT_APPEND = "feat-append"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class EncoderConfig:
    scheme: Scheme
    dim: int = DEFAULT_DIM
    num_feat: int = 19
    num_ch: int = 18
    num_bins: int = 20
    seed: int = 0
    level_per_feature: bool = False

    def __post_init__(self):
        object.__setattr__(self, "scheme", Scheme(self.scheme))
        for name in ("dim", "num_feat", "num_ch", "num_bins"):
            if getattr(self, name) <= 0:
                raise InvalidArgument(f"{name} must be positive")
        if self.num_bins < 2:
            raise InvalidArgument("num_bins must be >= 2")
        if self.vector_dim < self.num_bins:
            raise InvalidArgument(f"vector dim {self.vector_dim} smaller than num_bins {self.num_bins}")

    @property
    def subdim(self) -> int:
        """Per-feature sub-vector size under feat-append."""
        return self.dim // self.num_feat

    @property
    def vector_dim(self) -> int:
        """Dimension of the item-memory vectors the scheme operates on."""
        return self.subdim if self.scheme is Scheme.FEAT_APPEND else self.dim

    @property
    def out_dim(self) -> int:
        return self.subdim * self.num_feat if self.scheme is Scheme.FEAT_APPEND else self.dim

    def to_dict(self) -> dict:
        d = asdict(self)
        d["scheme"] = self.scheme.value
        return d

    def digest(self) -> str:
        return hashlib.sha256(json.dumps(self.to_dict(), sort_keys=True).encode()).hexdigest()[:16]


@dataclass(frozen=True)
class Memories:
    levels: ItemMemory
    tiebreak: Hypervector
    feat_ids: ItemMemory | None = None
    ch_ids: ItemMemory | None = None
    combo_ids: ItemMemory | None = None

    def tables(self) -> list[ItemMemory]:
        return [m for m in (self.feat_ids, self.ch_ids, self.combo_ids, self.levels) if m is not None]

    @property
    def memory_bits(self) -> int:
        return sum(m.memory_bits for m in self.tables())


def make_memories(cfg: EncoderConfig) -> Memories:
    dim = cfg.vector_dim
    s = cfg.scheme
    if cfg.level_per_feature:
        tables = [make_level_memory(dim, cfg.num_bins, cfg.seed, index=f) for f in range(cfg.num_feat)]
        levels = ItemMemory(MemoryKind.LEVEL_VALUES, dim, np.concatenate([t.words for t in tables]),
                            cfg.seed, cfg.num_bins)
    else:
        levels = make_level_memory(dim, cfg.num_bins, cfg.seed)
    feat = ch = combo = None
    if s in (Scheme.FEAT_X_VAL, Scheme.FEAT_X_CH_X_VAL, Scheme.CH_X_FEAT_X_VAL):
        feat = make_item_memory(MemoryKind.FEATURE_IDS, dim, cfg.num_feat, cfg.seed)
    if s in (Scheme.FEAT_X_CH_X_VAL, Scheme.CH_X_FEAT_X_VAL, Scheme.FEAT_APPEND):
        ch = make_item_memory(MemoryKind.CHANNEL_IDS, dim, cfg.num_ch, cfg.seed)
    if s is Scheme.CHFEATCOMB_X_VAL:
        combo = make_item_memory(MemoryKind.FEAT_CH_COMBO_IDS, dim, cfg.num_ch * cfg.num_feat, cfg.seed)
    return Memories(levels, tiebreak_hv(dim, cfg.seed), feat, ch, combo)


def _check(bins: np.ndarray, cfg: EncoderConfig, mem: Memories) -> np.ndarray:
    bins = np.asarray(bins)
    if bins.shape[-2:] != (cfg.num_ch, cfg.num_feat):
        raise InvalidArgument(f"bins shape {bins.shape} does not end in ({cfg.num_ch}, {cfg.num_feat})")
    if bins.size and (bins.min() < 0 or bins.max() >= cfg.num_bins):
        raise InvalidArgument(f"bin index outside [0, {cfg.num_bins})")
    if mem.levels.dim != cfg.vector_dim or mem.tiebreak.dim != cfg.vector_dim:
        raise InvalidArgument("item memories do not match the encoder dimension")
    need = {
        Scheme.FEAT_X_VAL: ("feat_ids",),
        Scheme.CHFEATCOMB_X_VAL: ("combo_ids",),
        Scheme.FEAT_X_CH_X_VAL: ("feat_ids", "ch_ids"),
        Scheme.CH_X_FEAT_X_VAL: ("feat_ids", "ch_ids"),
        Scheme.FEAT_APPEND: ("ch_ids",),
    }[cfg.scheme]
    for name in need:
        table = getattr(mem, name)
        if table is None or table.dim != cfg.vector_dim:
            raise InvalidArgument(f"scheme {cfg.scheme} needs {name} at dim {cfg.vector_dim}")
    n_levels = cfg.num_bins * (cfg.num_feat if cfg.level_per_feature else 1)
    if len(mem.levels) != n_levels:
        raise InvalidArgument(f"level memory has {len(mem.levels)} rows, expected {n_levels}")
    return bins.astype(np.int64)


def _level_row(cfg: EncoderConfig, f, b):
    return f * cfg.num_bins + b if cfg.level_per_feature else b


def encode_window(bins: np.ndarray, cfg: EncoderConfig, mem: Memories) -> Hypervector:
    """Encode one window with plain hypervector operations.

    Slow; :func:`encode_windows` is the batch path and must agree with this
    bit for bit.
    """
    bins = _check(bins, cfg, mem)
    C, F = cfg.num_ch, cfg.num_feat
    tie = mem.tiebreak

    def level(c, f):
        return mem.levels[_level_row(cfg, f, bins[c, f])]

    s = cfg.scheme
    if s is Scheme.FEAT_X_VAL:
        return bundle_threshold([bind(mem.feat_ids[f], level(c, f)) for c in range(C) for f in range(F)], tie)
    if s is Scheme.CHFEATCOMB_X_VAL:
        return bundle_threshold([bind(mem.combo_ids[c * F + f], level(c, f))
                                 for c in range(C) for f in range(F)], tie)
    if s is Scheme.FEAT_X_CH_X_VAL:
        inner = [bundle_threshold([bind(mem.ch_ids[c], level(c, f)) for c in range(C)], tie) for f in range(F)]
        return bundle_threshold([bind(mem.feat_ids[f], inner[f]) for f in range(F)], tie)
    if s is Scheme.CH_X_FEAT_X_VAL:
        inner = [bundle_threshold([bind(mem.feat_ids[f], level(c, f)) for f in range(F)], tie) for c in range(C)]
        return bundle_threshold([bind(mem.ch_ids[c], inner[c]) for c in range(C)], tie)
    return concat(bundle_threshold([bind(mem.ch_ids[c], level(c, f)) for c in range(C)], tie)
                  for f in range(F))


@njit(cache=True)
def _bundle_bound_pairs(id_bits, lv_bits, id_idx, lv_idx, tie, out):
    # out[w, g] = threshold(sum_k id_bits[id_idx[w,g,k]] ^ lv_bits[lv_idx[w,g,k]])
    W, G, K = id_idx.shape
    D = id_bits.shape[1]
    acc = np.zeros(D, np.uint16)
    for w in range(W):
        for g in range(G):
            acc[:] = 0
            for k in range(K):
                a = id_bits[id_idx[w, g, k]]
                b = lv_bits[lv_idx[w, g, k]]
                for i in range(D):
                    acc[i] += a[i] ^ b[i]
            o = out[w, g]
            for i in range(D):
                v = 2 * acc[i]
                if v > K:
                    o[i] = 1
                elif v == K:
                    o[i] = tie[i]
                else:
                    o[i] = 0


@njit(cache=True)
def _bind_bundle_groups(inner, id_bits, tie, out):
    # out[w] = threshold(sum_g id_bits[g] ^ inner[w, g])
    W, G, D = inner.shape
    acc = np.zeros(D, np.uint16)
    for w in range(W):
        acc[:] = 0
        for g in range(G):
            a = id_bits[g]
            b = inner[w, g]
            for i in range(D):
                acc[i] += a[i] ^ b[i]
        o = out[w]
        for i in range(D):
            v = 2 * acc[i]
            if v > G:
                o[i] = 1
            elif v == G:
                o[i] = tie[i]
            else:
                o[i] = 0


class BatchEncoder:
    """Encodes many windows at once; holds unpacked item memories."""

    def __init__(self, cfg: EncoderConfig, mem: Memories | None = None, chunk: int = 128):
        self.cfg = cfg
        self.mem = mem if mem is not None else make_memories(cfg)
        self.chunk = chunk
        m = self.mem
        self._lv = m.levels.bits()
        self._tie = m.tiebreak.bits()
        self._feat = None if m.feat_ids is None else m.feat_ids.bits()
        self._ch = None if m.ch_ids is None else m.ch_ids.bits()
        self._combo = None if m.combo_ids is None else m.combo_ids.bits()

    def encode_bits(self, bins: np.ndarray) -> np.ndarray:
        """Unpacked (W, out_dim) uint8 encodings of a (W, ch, feat) bin array."""
        cfg = self.cfg
        bins = _check(bins, cfg, self.mem)
        if bins.ndim != 3:
            raise InvalidArgument("encode_bits expects (window, channel, feature) bins")
        W = bins.shape[0]
        out = np.empty((W, cfg.out_dim), np.uint8)
        for s in range(0, W, self.chunk):
            out[s:s + self.chunk] = self._encode_chunk(bins[s:s + self.chunk])
        return out

    def encode(self, bins: np.ndarray) -> np.ndarray:
        """Packed (W, n_words) uint64 encodings."""
        return pack_bits(self.encode_bits(bins))

    def _encode_chunk(self, bins: np.ndarray) -> np.ndarray:
        cfg = self.cfg
        W, C, F = bins.shape
        D = cfg.vector_dim
        feat_of = np.broadcast_to(np.arange(F)[None, :], (C, F))
        lv = (feat_of * cfg.num_bins + bins) if cfg.level_per_feature else bins  # (W, C, F)
        s = cfg.scheme
        if s in (Scheme.FEAT_X_VAL, Scheme.CHFEATCOMB_X_VAL):
            if s is Scheme.FEAT_X_VAL:
                ids, id_idx = self._feat, np.broadcast_to(feat_of, (W, C, F))
            else:
                ids, id_idx = self._combo, np.broadcast_to(np.arange(C * F).reshape(C, F), (W, C, F))
            out = np.empty((W, 1, D), np.uint8)
            _bundle_bound_pairs(ids, self._lv, np.ascontiguousarray(id_idx.reshape(W, 1, C * F)),
                                np.ascontiguousarray(lv.reshape(W, 1, C * F)), self._tie, out)
            return out[:, 0]
        if s is Scheme.CH_X_FEAT_X_VAL:
            # groups are channels, terms are features
            inner = np.empty((W, C, D), np.uint8)
            id_idx = np.ascontiguousarray(np.broadcast_to(np.arange(F)[None, None, :], (W, C, F)))
            _bundle_bound_pairs(self._feat, self._lv, id_idx, np.ascontiguousarray(lv), self._tie, inner)
            out = np.empty((W, D), np.uint8)
            _bind_bundle_groups(inner, self._ch, self._tie, out)
            return out
        # groups are features, terms are channels
        inner = np.empty((W, F, D), np.uint8)
        id_idx = np.ascontiguousarray(np.broadcast_to(np.arange(C)[None, None, :], (W, F, C)))
        _bundle_bound_pairs(self._ch, self._lv, id_idx, np.ascontiguousarray(lv.transpose(0, 2, 1)),
                            self._tie, inner)
        if s is Scheme.FEAT_APPEND:
            return inner.reshape(W, F * D)
        out = np.empty((W, D), np.uint8)
        _bind_bundle_groups(inner, self._feat, self._tie, out)
        return out


def encode_windows(bins: np.ndarray, cfg: EncoderConfig, mem: Memories | None = None) -> np.ndarray:
    return BatchEncoder(cfg, mem).encode(bins)


@dataclass(frozen=True)
class CostReport:
    scheme: Scheme
    memory_bits: int
    bind_ops: int
    bundle_ops: int
    threshold_ops: int
    vector_dim: int

    @property
    def bind_bit_ops(self) -> int:
        return self.bind_ops * self.vector_dim

    @property
    def bit_ops(self) -> int:
        return (self.bind_ops + self.bundle_ops + self.threshold_ops) * self.vector_dim


def cost_model(cfg: EncoderConfig) -> CostReport:
    """Item-memory storage and per-window operation counts.

    ``bundle_ops`` counts vectors added into an accumulator; every bound
    vector is bundled once, so it equals ``bind_ops``.
    """
    F, C, B = cfg.num_feat, cfg.num_ch, cfg.num_bins
    levels = B * F if cfg.level_per_feature else B
    s = cfg.scheme
    if s is Scheme.FEAT_X_VAL:
        mem, binds, thr = F + levels, F * C, 1
    elif s is Scheme.CHFEATCOMB_X_VAL:
        mem, binds, thr = F * C + levels, F * C, 1
    elif s is Scheme.FEAT_X_CH_X_VAL:
        mem, binds, thr = F + C + levels, F * C + F, F + 1
    elif s is Scheme.CH_X_FEAT_X_VAL:
        mem, binds, thr = F + C + levels, F * C + C, C + 1
    else:
        mem, binds, thr = C + levels, F * C, F
    return CostReport(s, mem * cfg.vector_dim, binds, binds, thr, cfg.vector_dim)
