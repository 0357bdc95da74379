import numpy as np
import pytest

from hdeeg.analysis import Strategy, Target
from hdeeg.dataset import SynthSpec, generate_synthetic, synthetic_feature_folds
from hdeeg.encoders import Scheme
from hdeeg.errors import InsufficientData
from hdeeg.learner import Mode, TrainConfig
from hdeeg.pipeline import (PipelineConfig, cross_validate, discretize_split, feature_selection_cv,
                            subject_fold_tensors, train_all, with_scheme)

SMALL = PipelineConfig(dim=19 * 160)


@pytest.fixture(scope="module")
def folds():
    return synthetic_feature_folds(num_folds=4, num_ch=4, effects={f: 1.5 for f in (0, 3, 7, 12, 15)}, seed=3)


def oracle(train_tensors, test):
    return test.labels.copy()


def test_oracle_predictor_scores_one(folds):
    r = cross_validate(folds, predictor=oracle)
    for m in (r.mean_raw, r.mean_post):
        assert m.sens_e == m.ppv_e == m.sens_d == m.ppv_d == m.f1de == 1.0


def test_fold_order_does_not_change_mean(folds):
    a = cross_validate(folds, SMALL)
    b = cross_validate(folds[::-1], SMALL)
    assert a.mean_raw.f1de == pytest.approx(b.mean_raw.f1de, abs=1e-12)
    assert a.mean_post.f1de == pytest.approx(b.mean_post.f1de, abs=1e-12)
    assert [f.raw for f in a.folds] == [f.raw for f in b.folds][::-1]


def test_planted_signal_is_learned(folds):
    for scheme in Scheme:
        r = cross_validate(folds, with_scheme(SMALL, scheme))
        assert r.mean_post.f1de > 0.8, scheme


def test_onlinehd_runs(folds):
    cfg = PipelineConfig(dim=19 * 160, train=TrainConfig(Mode.ONLINEHD, 0.5, 2))
    assert cross_validate(folds, cfg).mean_post.f1de > 0.8


def test_onlinehd_learning_rate_only_scales(folds):
    # every update is proportional to the rate, so the thresholded models do not change
    a, b = (cross_validate(folds[:2], PipelineConfig(dim=19 * 64, train=TrainConfig(Mode.ONLINEHD, lr, 2)))
            for lr in (0.1, 0.9))
    assert all(np.array_equal(x.raw_pred, y.raw_pred) for x, y in zip(a.folds, b.folds))


def test_cv_needs_two_folds(folds):
    with pytest.raises(InsufficientData):
        cross_validate(folds[:1])
    with pytest.raises(InsufficientData):
        feature_selection_cv(folds[:1], SMALL)


def test_normalization_fit_on_training_only(folds):
    train_b, (test_b,), norm = discretize_split(folds[1:], [folds[0]], 20)
    lo = np.min([t.values.min(axis=0) for t in folds[1:]], axis=0)
    assert np.allclose(norm[..., 0], lo)
    assert np.array_equal(test_b.norm_params, norm)


def test_train_all(folds):
    models, norm, enc_cfg = train_all(folds, SMALL)
    assert models.dim == enc_cfg.out_dim and norm.shape == (4, 19, 2)
    assert models.encoder_digest == enc_cfg.digest()


def test_feature_selection_cv_shape(folds):
    res = feature_selection_cv(folds, SMALL, targets=(Target.F1E, Target.F1DE))
    assert len(res) == 4
    for fs in res:
        assert set(fs.results) == {(s, t) for s in Strategy for t in (Target.F1E, Target.F1DE)}
        assert len(fs.per_feature) == 19 and fs.correlation.shape == (19, 19)
        for r in fs.results.values():
            assert len(r.perf_curve_test) == 19


def test_subject_fold_tensors(tmp_path):
    spec = SynthSpec(num_channels=2, num_seizure_files=2, num_free_files=1, duration_s=60.0,
                     free_duration_s=400.0, seizure_len_s=(8.0, 10.0), informative_channels=[0])
    m = generate_synthetic(spec, tmp_path)
    recs = m.load_subject(m.subjects[0])
    names = [p.signal_path.split("/")[-1].split(".")[0] for p in m.subjects[0].recordings]
    out = subject_fold_tensors(recs, names, ratio=10, seed=0)
    assert [n for n, _ in out] == ["s01_sz00_sz0", "s01_sz01_sz0"]
    for _, t in out:
        assert t.values.shape[1:] == (2, 19)
        assert 0 < t.labels.mean() < 0.15
