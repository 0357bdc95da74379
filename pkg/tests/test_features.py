import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.spatial.distance import jensenshannon

from hdeeg.errors import DegenerateInputError, InvalidArgument, UndefinedDivergence
from hdeeg.features import (BANDS, FEATURE_NAMES, NUM_FEATURES, FeatureTensor, Recording, bandpass_filter,
                            discretize, discretize_values, extract_features, fit_normalization,
                            js_divergence, js_divergence_hist, window_features)

FS = 256.0
IDX = {n: i for i, n in enumerate(FEATURE_NAMES)}


def sine(freq, seconds, fs=FS, amp=1.0, phase=0.0):
    t = np.arange(int(seconds * fs)) / fs
    return amp * np.sin(2 * np.pi * freq * t + phase)


def rec_of(x, fs=FS, ann=()):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    return Recording(fs, [f"c{i}" for i in range(x.shape[1])], x, list(ann))


def rms(x):
    return float(np.sqrt(np.mean(np.square(x))))


def test_feature_list():
    assert NUM_FEATURES == 19
    assert FEATURE_NAMES[:3] == ["mean_ampl", "line_length", "p_tot"]
    assert "p_alpha_rel" in FEATURE_NAMES and "p_gamma" in FEATURE_NAMES


def test_recording_validation():
    with pytest.raises(InvalidArgument):
        rec_of(np.zeros(100), ann=[(0.2, 0.1)])
    with pytest.raises(InvalidArgument):
        rec_of(np.zeros(100), ann=[(0.0, 10.0)])
    with pytest.raises(InvalidArgument):
        rec_of(np.zeros(256), ann=[(0.1, 0.5), (0.4, 0.6)])
    with pytest.raises(InvalidArgument):
        Recording(0, ["a"], np.zeros((4, 1)))


def test_filter_rejects_slow_drift():
    x = sine(0.1, 120)
    y = bandpass_filter(rec_of(x), 1, 20, 4).samples[:, 0]
    assert rms(y) < 0.05 * rms(x)


def test_filter_passes_midband_without_lag():
    x = sine(10, 20)
    y = bandpass_filter(rec_of(x), 1, 20, 4).samples[:, 0]
    mid = slice(int(5 * FS), int(15 * FS))
    assert abs(rms(y[mid]) / rms(x[mid]) - 1) < 0.10
    lags = np.arange(-10, 11)
    xc = [np.dot(x[mid], np.roll(y, -k)[mid]) for k in lags]
    assert lags[int(np.argmax(xc))] == 0


def test_filter_zero_and_length():
    out = bandpass_filter(rec_of(np.zeros((2000, 2)), ann=[(1.0, 2.0)]), 1, 20, 4)
    assert out.samples.shape == (2000, 2)
    assert not out.samples.any()
    assert out.annotations == [(1.0, 2.0)]


def test_filter_errors():
    with pytest.raises(InvalidArgument):
        bandpass_filter(rec_of(np.zeros(5000)), 20, 10)
    with pytest.raises(InvalidArgument):
        bandpass_filter(rec_of(np.zeros(5000)), 1, 200)
    with pytest.raises(DegenerateInputError):
        bandpass_filter(rec_of(np.zeros(20)), 1, 20, 4)


def test_simple_time_features():
    f = window_features(np.full(1024, -3.0), FS)
    assert f[IDX["line_length"]] == 0
    assert f[IDX["mean_ampl"]] == 3.0
    assert window_features(np.array([0.0, 1, 0, 1, 0]), FS)[IDX["line_length"]] == 4


def brute_periodogram(x, fs):
    # direct DFT sum, one-sided power per frequency bin
    n = len(x)
    x = x - x.mean()
    t = np.arange(n)
    freqs, power = [], []
    for k in range(n // 2 + 1):
        c = np.sum(x * np.exp(-2j * np.pi * k * t / n))
        p = abs(c) ** 2 / n ** 2
        if 0 < k < n / 2:
            p *= 2
        freqs.append(k * fs / n)
        power.append(p)
    return np.array(freqs), np.array(power)


def test_band_powers_match_brute_force():
    rng = np.random.default_rng(0)
    x = sine(10, 4) + 0.3 * rng.standard_normal(1024) + 0.5 * sine(22.5, 4)
    f = window_features(x, FS)
    freqs, power = brute_periodogram(x, FS)
    tot = power[(freqs >= 0) & (freqs < 45)].sum()
    assert f[IDX["p_tot"]] == pytest.approx(tot, rel=1e-9)
    for name, lo, hi in BANDS:
        ref = power[(freqs >= lo) & (freqs < hi)].sum()
        assert f[IDX[f"p_{name}"]] == pytest.approx(ref, rel=1e-9, abs=1e-15)
        assert f[IDX[f"p_{name}_rel"]] == pytest.approx(ref / tot, rel=1e-9, abs=1e-15)


def test_alpha_sinusoid_concentrates():
    f = window_features(sine(10, 4), FS)
    assert f[IDX["p_alpha"]] >= 0.9 * f[IDX["p_tot"]]
    assert f[IDX["p_alpha_rel"]] >= 0.9


def test_zero_signal_relative_powers_are_zero():
    f = window_features(np.zeros(1024), FS)
    assert not f.any()


def test_window_count_and_labels():
    rec = rec_of(np.zeros((int(30 * FS), 2)), ann=[(10.0, 14.0)])
    t = extract_features(rec, 4.0, 0.5)
    assert t.values.shape == ((30 - 4) * 2 + 1, 2, 19)
    starts = np.arange(t.n_windows) * 0.5
    overlap = np.clip(np.minimum(starts + 4, 14) - np.maximum(starts, 10), 0, None)
    assert np.array_equal(t.labels, (overlap >= 2).astype(np.uint8))
    assert t.labels.sum() == 9  # starts 8.0 .. 12.0


def test_window_longer_than_recording():
    with pytest.raises(InvalidArgument):
        extract_features(rec_of(np.zeros(512)), 4.0, 0.5)


def test_translation_consistency():
    rng = np.random.default_rng(1)
    x = rng.standard_normal((int(20 * FS), 3))
    k = 3
    shift = int(k * 0.5 * FS)
    a = extract_features(rec_of(x), 4.0, 0.5).values
    b = extract_features(rec_of(x[shift:]), 4.0, 0.5).values
    assert np.allclose(a[k:], b, rtol=1e-12, atol=1e-12)


def test_feature_subset_selection():
    rng = np.random.default_rng(2)
    t = extract_features(rec_of(rng.standard_normal((2048, 2))), 4.0, 0.5,
                         feature_names=["line_length", "p_theta"])
    full = extract_features(rec_of(rng.standard_normal((2048, 2))), 4.0, 0.5)
    assert t.feature_names == ["line_length", "p_theta"]
    assert t.values.shape[2] == 2 and full.values.shape[2] == 19


def test_relative_powers_of_disjoint_partition_sum_to_one():
    rng = np.random.default_rng(3)
    f = window_features(rng.standard_normal((50, 1024)), FS)
    parts = ["dc", "delta", "theta", "alpha", "beta", "gamma"]
    total = sum(f[:, IDX[f"p_{p}_rel"]] for p in parts)
    assert np.allclose(total, 1.0, atol=1e-9)


def test_fit_normalization_examples():
    def norm_of(vals):
        v = np.asarray(vals, dtype=float).reshape(-1, 1, 1)
        return tuple(fit_normalization(FeatureTensor(v, np.zeros(len(vals), np.uint8)))[0, 0])

    assert norm_of([1, 2, 3]) == (1, 3)
    assert norm_of([5, 5]) == (5, 6)
    assert norm_of([-2, 0, 4]) == (-2, 4)
    with pytest.raises(InvalidArgument):
        norm_of([1])
    with pytest.raises(InvalidArgument):
        fit_normalization([])


def test_discretize_examples():
    norm = np.array([0.0, 10.0])
    assert discretize_values(np.array(0.0), norm, 20) == 0
    assert discretize_values(np.array(10.0), norm, 20) == 19
    assert discretize_values(np.array(5.0), norm, 20) == 10
    assert discretize_values(np.array(110.0), norm, 20) == 19
    assert discretize_values(np.array(-50.0), norm, 20) == 0


def test_discretize_requires_norm():
    t = FeatureTensor(np.zeros((3, 1, 1)), np.zeros(3, np.uint8))
    with pytest.raises(InvalidArgument):
        discretize(t, None, 20)
    with pytest.raises(InvalidArgument):
        discretize(t, np.zeros((2, 1, 2)), 20)


@settings(max_examples=200, deadline=None)
@given(st.floats(-1e6, 1e6), st.floats(-1e6, 1e6), st.floats(-1e3, 1e3), st.floats(1e-3, 1e3),
       st.integers(2, 64))
def test_discretize_monotone(v1, v2, lo, width, bins):
    norm = np.array([lo, lo + width])
    a, b = sorted((v1, v2))
    ba = discretize_values(np.array(a), norm, bins)
    bb = discretize_values(np.array(b), norm, bins)
    assert 0 <= ba <= bb <= bins - 1


def test_js_examples():
    assert js_divergence_hist([1, 2, 3], [2, 4, 6]) == 0.0
    assert js_divergence_hist([1, 0], [0, 1]) == pytest.approx(1.0)
    # independent oracle: scipy returns the square root of the divergence
    ref = jensenshannon([0.5, 0.5], [1.0, 0.0], base=2) ** 2
    assert js_divergence_hist([0.5, 0.5], [1, 0]) == pytest.approx(ref, abs=1e-12)
    assert js_divergence_hist([0.5, 0.5], [1, 0]) == pytest.approx(0.3113, abs=5e-5)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(0, 20), min_size=2, max_size=10).filter(any), st.data())
def test_js_symmetric_and_zero_iff_equal(p, data):
    q = data.draw(st.lists(st.integers(0, 20), min_size=len(p), max_size=len(p)).filter(any))
    assert js_divergence_hist(p, q) == pytest.approx(js_divergence_hist(q, p), abs=1e-12)
    pn, qn = np.array(p) / sum(p), np.array(q) / sum(q)
    assert (js_divergence_hist(p, q) < 1e-12) == bool(np.allclose(pn, qn))
    assert 0.0 <= js_divergence_hist(p, q) <= 1.0 + 1e-12


def test_js_divergence_on_tensor():
    bins = np.zeros((6, 2, 1), dtype=np.int64)
    bins[3:, 0, 0] = 3  # channel 0 separates the classes, channel 1 does not
    labels = np.array([0, 0, 0, 1, 1, 1], np.uint8)
    t = FeatureTensor(bins.astype(float), labels, ["f"], ["a", "b"], bins=bins, num_bins=4)
    per_ch, pooled = js_divergence(t, 0)
    assert per_ch.tolist() == pytest.approx([1.0, 0.0])
    assert 0 < pooled < 1
    with pytest.raises(UndefinedDivergence):
        js_divergence(FeatureTensor(bins.astype(float), np.zeros(6, np.uint8), bins=bins, num_bins=4), 0)


def test_tensor_roundtrip(tmp_path):
    rng = np.random.default_rng(4)
    t = extract_features(rec_of(rng.standard_normal((3000, 2)), ann=[(2.0, 7.0)]), 4.0, 0.5)
    t = discretize(t, fit_normalization(t), 20)
    t.save(tmp_path / "fold")
    back = FeatureTensor.load(tmp_path / "fold")
    assert np.array_equal(back.values, t.values)
    assert np.array_equal(back.bins, t.bins)
    assert np.array_equal(back.labels, t.labels)
    assert np.array_equal(back.norm_params, t.norm_params)
    assert (back.window_len_s, back.step_s, back.num_bins) == (4.0, 0.5, 20)
    assert back.feature_names == t.feature_names
