import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hdeeg.errors import DegenerateTraining, InvalidArgument, ParseError
from hdeeg.hdc import Hypervector, bind, hamming, random_hv
from hdeeg.learner import (NONSEIZURE, SEIZURE, Mode, Models, TrainConfig, check_encoder, classify,
                           classify_batch, parse_models, train)

DIM = 256


def rv(seed, dim=DIM):
    return random_hv(dim, np.random.default_rng(seed))


def packed(vs):
    return np.stack([v.words for v in vs])


def naive_majority(vs):
    bits = np.stack([v.bits() for v in vs]).astype(int)
    return (2 * bits.sum(0) > len(vs)).astype(np.uint8)


def test_singlepass_unanimous():
    v = rv(1)
    m = train([v, v, v, rv(2)], [1, 1, 1, 0])
    assert m.seizure.hv == v
    assert m.seizure.count == 3 and m.nonseizure.count == 1


def test_singlepass_majority_of_three():
    vs = [rv(i) for i in range(3)]
    m = train(vs + [rv(9)], [1, 1, 1, 0])
    assert m.seizure.hv.bits().tolist() == naive_majority(vs).tolist()


def test_packed_and_hypervector_inputs_agree():
    vs = [rv(i) for i in range(6)]
    labels = [1, 0, 1, 0, 0, 1]
    a = train(vs, labels)
    b = train(packed(vs), labels, dim=DIM)
    assert a.seizure.hv == b.seizure.hv and a.nonseizure.hv == b.nonseizure.hv


def test_onlinehd_zero_weight_fixed_point():
    v, n = rv(1), rv(2)
    cfg = TrainConfig(Mode.ONLINEHD, learning_rate=0.5)
    before = train([v, n], [1, 0], cfg)
    after = train([v, n, v], [1, 0, 1], cfg)
    assert before.seizure.hv == v
    assert np.array_equal(before.seizure.acc.counts, after.seizure.acc.counts)
    assert before.seizure.acc.weight_total == after.seizure.acc.weight_total


def test_onlinehd_weight_formula():
    # second seizure vector at distance h from the model is added with weight lr * h
    v, n = rv(1), rv(2)
    bits = v.bits().copy()
    bits[:50] ^= 1
    w = Hypervector.from_bits(bits)
    cfg = TrainConfig(Mode.ONLINEHD, learning_rate=0.25)
    m = train([v, n, w], [1, 0, 1], cfg)
    h = hamming(v, w)
    assert h == 50 / DIM and hamming(w, n) > h
    # the first vector meets an empty model (distance 0.5)
    expect = 0.25 * 0.5 * (2.0 * v.bits() - 1) + 0.25 * h * (2.0 * w.bits() - 1)
    assert np.allclose(m.seizure.acc.counts, expect)


def test_onlinehd_subtracts_from_misleading_class():
    v = rv(1)
    n = v.complement()
    x = Hypervector.from_bits(np.concatenate([v.bits()[:200], n.bits()[200:]]))  # closer to v
    cfg = TrainConfig(Mode.ONLINEHD, learning_rate=1.0)
    m = train([v, n, x], [1, 0, 0], cfg)
    s_wrong, s_correct = 1 - hamming(x, v), 1 - hamming(x, n)
    assert s_wrong > s_correct
    assert m.seizure.acc.weight_total == pytest.approx(0.5 + (s_wrong - s_correct))


def test_onlinehd_reproducible():
    vs = [rv(i) for i in range(20)]
    labels = [i % 3 == 0 for i in range(20)]
    cfg = TrainConfig(Mode.ONLINEHD, 0.3, epochs=2)
    a, b = train(vs, labels, cfg), train(vs, labels, cfg)
    assert a.seizure.hv == b.seizure.hv
    assert np.array_equal(a.nonseizure.acc.counts, b.nonseizure.acc.counts)


def test_single_class_is_degenerate():
    with pytest.raises(DegenerateTraining):
        train([rv(1), rv(2)], [1, 1])
    with pytest.raises(DegenerateTraining):
        train([rv(1)], [0])


def test_train_input_errors():
    with pytest.raises(InvalidArgument):
        train([], [])
    with pytest.raises(InvalidArgument):
        train([rv(1), rv(2)], [1])
    with pytest.raises(InvalidArgument):
        train(packed([rv(1), rv(2)]), [1, 0])
    with pytest.raises(InvalidArgument):
        train([rv(1), rv(2, 128)], [1, 0])


def test_train_config_validation():
    for bad in (dict(learning_rate=0), dict(learning_rate=1.5), dict(epochs=0)):
        with pytest.raises(InvalidArgument):
            TrainConfig(**bad)
    with pytest.raises(ValueError):
        TrainConfig(mode="sgd")


def test_classify_examples():
    s, n = rv(1), rv(2)
    m = train([s, n], [1, 0])
    label, d_s, d_ns = classify(s, m)
    assert (label, d_s) == (SEIZURE, 0.0)
    label, d_s, d_ns = classify(n, m)
    assert (label, d_ns) == (NONSEIZURE, 0.0)
    with pytest.raises(InvalidArgument):
        classify(rv(3, 64), m)


def test_classify_tie_is_nonseizure():
    s = Hypervector.from_bits([1, 1, 0, 0])
    n = Hypervector.from_bits([0, 0, 1, 1])
    m = train([s, n], [1, 0])
    label, d_s, d_ns = classify(Hypervector.from_bits([1, 0, 1, 0]), m)
    assert d_s == d_ns == 0.5
    assert label == NONSEIZURE


def test_classify_batch_matches_single():
    vs = [rv(i) for i in range(8)]
    m = train(vs, [1, 0, 1, 1, 0, 0, 0, 1])
    labels, d_s, d_ns = classify_batch(packed(vs), m)
    for v, l, a, b in zip(vs, labels, d_s, d_ns):
        assert classify(v, m) == (l, a, b)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32), st.randoms(use_true_random=False))
def test_singlepass_order_invariant(seed, rnd):
    rng = np.random.default_rng(seed)
    vs = [random_hv(130, rng) for _ in range(9)]
    labels = [1, 0] + [int(b) for b in rng.integers(0, 2, 7)]
    idx = list(range(9))
    rnd.shuffle(idx)
    a = train(vs, labels)
    b = train([vs[i] for i in idx], [labels[i] for i in idx])
    assert a.seizure.hv == b.seizure.hv and a.nonseizure.hv == b.nonseizure.hv


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32))
def test_absorbing_twice_never_moves_away(seed):
    rng = np.random.default_rng(seed)
    vs = [random_hv(200, rng) for _ in range(6)]
    x = random_hv(200, rng)
    m = train(vs, [1, 1, 1, 0, 0, 0])
    before = hamming(x, m.seizure.hv)
    m.seizure.absorb(x.bits())
    once = hamming(x, m.seizure.hv)
    m.seizure.absorb(x.bits())
    assert once <= before
    assert hamming(x, m.seizure.hv) <= once


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32))
def test_classify_invariant_under_common_binding(seed):
    rng = np.random.default_rng(seed)
    vs = [random_hv(300, rng) for _ in range(6)]  # odd count per class: no ties
    labels = [1, 1, 1, 0, 0, 0]
    c = random_hv(300, rng)
    x = random_hv(300, rng)
    m = train(vs, labels)
    mc = train([bind(v, c) for v in vs], labels)
    assert mc.seizure.hv == bind(m.seizure.hv, c)
    assert classify(bind(x, c), mc)[0] == classify(x, m)[0]


def test_models_roundtrip(tmp_path):
    vs = [rv(i) for i in range(7)]
    m = train(vs, [1, 0, 1, 0, 0, 1, 0], TrainConfig(Mode.ONLINEHD, 0.4, 2, seed=5), encoder_digest="abc")
    m.save(tmp_path / "m.model")
    back = Models.load(tmp_path / "m.model")
    assert back.seizure.hv == m.seizure.hv and back.nonseizure.hv == m.nonseizure.hv
    assert np.array_equal(back.seizure.acc.counts, m.seizure.acc.counts)
    assert back.train_config == m.train_config
    assert back.encoder_digest == "abc"
    blob = (tmp_path / "m.model").read_bytes()
    with pytest.raises(ParseError):
        parse_models(blob[:-3])
    with pytest.raises(ParseError):
        parse_models(b"NOPE" + blob[4:])


def test_check_encoder():
    m = train([rv(1), rv(2)], [1, 0], encoder_digest="aaa")
    check_encoder(m, "aaa")
    with pytest.raises(InvalidArgument):
        check_encoder(m, "bbb")
