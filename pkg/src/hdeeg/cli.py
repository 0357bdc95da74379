"""Command-line entry point: ``hdeeg <subcommand> [flags]``.

Every subcommand writes its reports plus a ``run-manifest.json`` into
``--out``. A run manifest (or any JSON object of flag values) can be fed
back through ``--config``; explicit flags win over file values.
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import io
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__, plotting
from .analysis import Strategy, Target
from .dataset import DatasetManifest, SynthSpec, generate_synthetic
from .encoders import EncoderConfig, Scheme, cost_model
from .errors import ConfigError, DataError, HDError
from .evaluation import METRICS, MeanReport
from .features import BANDS, FeatureTensor, discretize, fit_normalization, js_divergence
from .learner import Mode, TrainConfig
from .pipeline import (PipelineConfig, cross_validate, discretize_split, feature_selection_cv,
                       subject_fold_tensors, train_all, with_scheme)

log = logging.getLogger("hdeeg")

DEFAULTS = {
    "dim": 19000,
    "bins": 20,
    "scheme": Scheme.FEAT_X_CH_X_VAL.value,
    "mode": Mode.SINGLEPASS.value,
    "lr": 0.5,
    "epochs": 1,
    "ratio": 10.0,
    "postprocess_window": 5.0,
    "strategy": Strategy.GREEDY_PERF_CORR.value,
    "metric": Target.F1DE.value,
    "seed": 0,
    "seeds": 1,
    "jobs": 1,
    "level_per_feature": False,
    "allow_null": False,
    "window": 4.0,
    "step": 0.5,
    "band_low": 1.0,
    "band_high": 20.0,
    "filter_order": 4,
    "num_feat": 19,
    "num_ch": 18,
    "spec": None,
    "manifest": None,
    "features": None,
    "format": None,
}
MANIFEST_NAME = "run-manifest.json"
INDEX_NAME = "features-index.json"


# -- output helpers ----------------------------------------------------------

def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if np.isinf(v):
            return "inf" if v > 0 else "-inf"
        return f"{v:.6f}"
    return str(v)


def write_csv(path: Path, header: list[str], rows) -> Path:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    path.write_text(buf.getvalue())
    return path


def write_json(path: Path, obj) -> Path:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")
    return path


def format_table(header: list[str], rows) -> str:
    cells = [header] + [[_fmt(v) for v in row] for row in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(header))]
    lines = ["  ".join(c.rjust(w) if i else c.ljust(w) for i, (c, w) in enumerate(zip(r, widths)))
             for r in cells]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines)


def _pmap(fn, items, jobs: int) -> list:
    items = list(items)
    if jobs <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


# -- configuration -----------------------------------------------------------

def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file {p} not found")
    try:
        raw = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{p}:{exc.lineno}: {exc.msg}") from None
    if not isinstance(raw, dict):
        raise ConfigError(f"{p}: expected a JSON object")
    if "config" in raw and isinstance(raw["config"], dict):  # a run manifest
        raw = raw["config"]
    cfg = {k.replace("-", "_"): v for k, v in raw.items()}
    unknown = sorted(set(cfg) - set(DEFAULTS))
    if unknown:
        raise ConfigError(f"{p}: unknown keys {unknown}")
    return cfg


def resolve(args: argparse.Namespace, keys) -> tuple[dict, list[dict]]:
    """Merge defaults, config file and flags; return the config and flag overrides."""
    file_cfg = _load_config(getattr(args, "config", None))
    cfg, overrides = {}, []
    for k in keys:
        flag = getattr(args, k, None)
        if flag is not None:
            cfg[k] = flag
            if k in file_cfg and file_cfg[k] != flag:
                overrides.append({"key": k, "file": file_cfg[k], "flag": flag})
        else:
            cfg[k] = file_cfg.get(k, DEFAULTS[k])
    return cfg, overrides


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def write_run_manifest(out: Path, command: str, cfg: dict, overrides: list[dict],
                       extra: dict | None = None) -> Path:
    for o in overrides:
        log.info("flag --%s=%s overrides config value %s", o["key"].replace("_", "-"), o["flag"], o["file"])
    return write_json(out / MANIFEST_NAME, {
        "command": command,
        "version": __version__,
        "config": cfg,
        "overrides": overrides,
        **(extra or {}),
        "created_utc": _dt.datetime.now(_dt.timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ"),
    })


def pipeline_config(cfg: dict) -> PipelineConfig:
    try:
        train = TrainConfig(Mode(cfg["mode"]), float(cfg["lr"]), int(cfg["epochs"]), int(cfg["seed"]))
        return PipelineConfig(Scheme(cfg["scheme"]), int(cfg["dim"]), int(cfg["bins"]), int(cfg["seed"]),
                              bool(cfg["level_per_feature"]), train, float(cfg["postprocess_window"]))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


# -- feature directories -----------------------------------------------------

def load_feature_dir(path: str | None) -> dict[str, tuple[list[str], list[FeatureTensor]]]:
    if not path:
        raise ConfigError("--features is required")
    root = Path(path)
    index_path = root / INDEX_NAME
    if not index_path.is_file():
        raise ConfigError(f"{index_path} not found (run 'features' first)")
    index = json.loads(index_path.read_text())
    out = {}
    for sid, names in index["subjects"].items():
        try:
            out[sid] = (names, [FeatureTensor.load(root / sid / n) for n in names])
        except (OSError, ValueError) as exc:
            raise DataError(f"cannot read feature tensors of {sid}: {exc}") from None
    return out


# -- subcommands -------------------------------------------------------------

def cmd_synth(args) -> int:
    cfg, overrides = resolve(args, ["spec", "seed", "format", "allow_null"])
    if cfg["spec"]:
        p = Path(cfg["spec"])
        if not p.is_file():
            raise ConfigError(f"spec file {p} not found")
        spec = SynthSpec.from_json(p.read_text(), str(p), allow_null=bool(cfg["allow_null"]))
    else:
        spec = SynthSpec()
    # the spec's own seed stays unless a seed was given explicitly
    if args.seed is not None or "seed" in _load_config(args.config):
        spec = replace(spec, seed=int(cfg["seed"]))
    if cfg["format"]:
        spec = replace(spec, format=cfg["format"])
    out = _out_dir(args)
    manifest = generate_synthetic(spec, out)
    cfg["seed"] = spec.seed
    write_run_manifest(out, "synth", cfg, overrides, {"synth_spec": spec.to_dict()})
    n = sum(len(s.recordings) for s in manifest.subjects)
    print(f"wrote {len(manifest.subjects)} subject(s), {n} recordings, "
          f"{spec.num_channels} channels to {out}")
    return 0


def _feature_subject(job):
    recs, names, cfg = job
    return subject_fold_tensors(recs, names, cfg["ratio"], cfg["seed"], (cfg["band_low"], cfg["band_high"]),
                                cfg["filter_order"], cfg["window"], cfg["step"])


def cmd_features(args) -> int:
    cfg, overrides = resolve(args, ["manifest", "ratio", "seed", "window", "step", "band_low", "band_high",
                                    "filter_order", "bins", "jobs"])
    if not cfg["manifest"] or not Path(cfg["manifest"]).is_file():
        raise ConfigError(f"manifest {cfg['manifest']} not found")
    attenuated = [name for name, lo, hi in BANDS if hi > cfg["band_high"] or lo < cfg["band_low"]]
    if attenuated:
        log.warning("band-pass [%g, %g] Hz attenuates the %s band powers; their features carry little signal",
                    cfg["band_low"], cfg["band_high"], ", ".join(attenuated))
    manifest = DatasetManifest.load(cfg["manifest"])
    out = _out_dir(args)
    jobs = []
    for subject in manifest.subjects:
        recs = manifest.load_subject(subject, min_duration_s=cfg["window"])
        names = [Path(r.signal_path).stem for r in subject.recordings]
        jobs.append((recs, names, cfg))
    results = _pmap(_feature_subject, jobs, int(cfg["jobs"]))

    index = {"subjects": {}}
    norm_rows, js_rows, summary = [], [], []
    for subject, folds in zip(manifest.subjects, results):
        sdir = out / subject.id
        sdir.mkdir(exist_ok=True)
        names = [n for n, _ in folds]
        tensors = [t for _, t in folds]
        index["subjects"][subject.id] = names
        for name, tensor in folds:
            tensor.save(sdir / name)
        feat_names = tensors[0].feature_names
        # normalization fitted on the training side of every split
        for i, held in enumerate(names):
            norm = fit_normalization(tensors[:i] + tensors[i + 1:]) if len(tensors) > 1 else \
                fit_normalization(tensors)
            for c, ch in enumerate(tensors[0].channels):
                for f, fname in enumerate(feat_names):
                    norm_rows.append([subject.id, held, ch, fname, norm[c, f, 0], norm[c, f, 1]])
        pooled = FeatureTensor(np.concatenate([t.values for t in tensors]),
                               np.concatenate([t.labels for t in tensors]), feat_names,
                               tensors[0].channels, tensors[0].window_len_s, tensors[0].step_s)
        binned = discretize(pooled, fit_normalization(pooled), int(cfg["bins"]))
        for f, fname in enumerate(feat_names):
            per_ch, js = js_divergence(binned, f)
            js_rows.append([subject.id, f, fname, js, per_ch.mean(), per_ch.max()])
        summary.append([subject.id, len(names), int(pooled.labels.sum()), pooled.n_windows])

    index.update({"feature_names": feat_names, "window_len_s": cfg["window"], "step_s": cfg["step"],
                  "band_hz": [cfg["band_low"], cfg["band_high"]], "filter_order": cfg["filter_order"],
                  "ratio": cfg["ratio"], "seed": cfg["seed"]})
    write_json(out / INDEX_NAME, index)
    write_csv(out / "norm-params.csv", ["subject", "held_out_fold", "channel", "feature", "min", "max"], norm_rows)
    write_csv(out / "js-divergence.csv", ["subject", "feature_index", "feature", "js_pooled", "js_channel_mean",
                                          "js_channel_max"], js_rows)
    first = [r for r in js_rows if r[0] == js_rows[0][0]]
    plotting.bar_chart(out / "js-divergence.svg", [r[2] for r in first], {"pooled": [r[3] for r in first]},
                       "JS divergence (bits)", f"Class divergence per feature, {first[0][0]}")
    write_run_manifest(out, "features", cfg, overrides)
    print(format_table(["subject", "folds", "seizure_windows", "windows"], summary))
    return 0


def cmd_train(args) -> int:
    keys = ["features", "dim", "bins", "scheme", "mode", "lr", "epochs", "seed", "level_per_feature"]
    cfg, overrides = resolve(args, keys)
    cfg["postprocess_window"] = DEFAULTS["postprocess_window"]
    pcfg = pipeline_config(cfg)
    data = load_feature_dir(cfg["features"])
    out = _out_dir(args)
    rows = []
    for sid, (names, tensors) in data.items():
        models, norm, enc_cfg = train_all(tensors, pcfg)
        models.save(out / f"{sid}.model")
        write_json(out / f"{sid}.encoder.json", enc_cfg.to_dict() | {"digest": enc_cfg.digest()})
        ch, feats = tensors[0].channels, tensors[0].feature_names
        write_csv(out / f"{sid}.norm.csv", ["channel", "feature", "min", "max"],
                  [[c, f, norm[i, j, 0], norm[i, j, 1]] for i, c in enumerate(ch) for j, f in enumerate(feats)])
        sep = float(np.count_nonzero(models.seizure.hv.bits() != models.nonseizure.hv.bits())) / models.dim
        rows.append([sid, pcfg.scheme.value, models.dim, models.seizure.count, models.nonseizure.count, sep])
    header = ["subject", "scheme", "dim", "seizure_windows", "nonseizure_windows", "model_distance"]
    write_csv(out / "train-summary.csv", header, rows)
    write_run_manifest(out, "train", cfg, overrides)
    print(format_table(header, rows))
    return 0


def _metric_cols(prefix: str) -> list[str]:
    return [f"{prefix}_{m}" for m in METRICS]


def _cv_subject(job):
    tensors, names, pcfg = job
    return cross_validate(tensors, pcfg, names)


def cmd_eval(args) -> int:
    keys = ["features", "dim", "bins", "scheme", "mode", "lr", "epochs", "seed", "level_per_feature",
            "postprocess_window", "jobs"]
    cfg, overrides = resolve(args, keys)
    pcfg = pipeline_config(cfg)
    data = load_feature_dir(cfg["features"])
    out = _out_dir(args)
    results = _pmap(_cv_subject, [(t, n, pcfg) for n, t in data.values()], int(cfg["jobs"]))
    fold_rows, summary, table = [], {}, []
    counts = ["tp_e", "fp_e", "fn_e", "tp_d", "fp_d", "fn_d", "tn_d"]
    for sid, res in zip(data, results):
        for f in res.folds:
            for stage, rep in (("raw", f.raw), ("post", f.post)):
                fold_rows.append([sid, f.name, stage, *(rep.counts()[c] for c in counts),
                                  *(rep.metrics()[m] for m in METRICS)])
        summary[sid] = {"raw": res.mean_raw.metrics(), "post": res.mean_post.metrics(), "folds": len(res.folds)}
        table.append([sid, len(res.folds), res.mean_raw.f1de, res.mean_post.sens_e, res.mean_post.ppv_e,
                      res.mean_post.f1d, res.mean_post.f1de])
    overall = {"raw": MeanReport.of([MeanReport(s["raw"]) for s in summary.values()]).metrics(),
               "post": MeanReport.of([MeanReport(s["post"]) for s in summary.values()]).metrics()}
    write_csv(out / "eval-folds.csv", ["subject", "fold", "stage", *counts, *METRICS], fold_rows)
    write_json(out / "eval-summary.json", {"subjects": summary, "mean": overall, "pipeline": pcfg.to_dict()})
    post = [r for r in fold_rows if r[2] == "post"]
    raw = [r for r in fold_rows if r[2] == "raw"]
    plotting.bar_chart(out / "eval.svg", [f"{r[0]}/{r[1]}" for r in post],
                       {"raw": [r[-1] for r in raw], "post-processed": [r[-1] for r in post]},
                       "F1DEgmean", f"Leave-one-seizure-out, {pcfg.scheme.value}")
    write_run_manifest(out, "eval", cfg, overrides)
    print(format_table(["subject", "folds", "raw_f1de", "sens_e", "ppv_e", "f1d", "f1de"], table))
    return 0


def _training_js(tensors: list[FeatureTensor], i: int, bins: int) -> list[float]:
    train_b, _, _ = discretize_split(tensors[:i] + tensors[i + 1:], [], bins)
    pooled = replace(train_b[0], values=np.concatenate([t.values for t in train_b]),
                     bins=np.concatenate([t.bins for t in train_b]),
                     labels=np.concatenate([t.labels for t in train_b]))
    return [js_divergence(pooled, f)[1] for f in range(pooled.values.shape[2])]


def cmd_select(args) -> int:
    keys = ["features", "dim", "bins", "mode", "lr", "epochs", "seed", "level_per_feature",
            "postprocess_window", "strategy", "metric"]
    cfg, overrides = resolve(args, keys)
    cfg["scheme"] = Scheme.FEAT_APPEND.value
    pcfg = pipeline_config(cfg)
    strategies = list(Strategy) if cfg["strategy"] == "all" else [Strategy(cfg["strategy"])]
    target = Target(cfg["metric"])
    data = load_feature_dir(cfg["features"])
    out = _out_dir(args)
    feat_rows, summary = [], {}
    order_rows = {s: [] for s in strategies}
    curve_rows = {s: [] for s in strategies}
    mean_curves = {s: {"train": [], "test": []} for s in strategies}
    for sid, (names, tensors) in data.items():
        feat_names = tensors[0].feature_names
        folds = feature_selection_cv(tensors, pcfg, strategies, (target,), names, raw_curves=True)
        summary[sid] = {}
        for i, fs in enumerate(folds):
            js = _training_js(tensors, i, pcfg.num_bins)
            for m in fs.per_feature:
                feat_rows.append([sid, fs.name, m.feature, feat_names[m.feature], m.separability, m.confidence,
                                  m.perf_post.f1e, m.perf_post.f1d, m.perf_post.f1de, m.perf.f1de, js[m.feature]])
            for s in strategies:
                res, raw = fs.results[(s, target)], fs.raw_results[(s, target)]
                for rank, f in enumerate(res.ordering, 1):
                    order_rows[s].append([sid, fs.name, rank, f, feat_names[f]])
                for n, (tr, te, rtr, rte) in enumerate(zip(res.perf_curve_train, res.perf_curve_test,
                                                           raw.perf_curve_train, raw.perf_curve_test), 1):
                    curve_rows[s].append([sid, fs.name, n, tr.f1e, tr.f1de, te.f1e, te.f1d, te.f1de,
                                          rtr.f1de, rte.f1de])
                mean_curves[s]["train"].append(res.train_curve())
                mean_curves[s]["test"].append(res.test_curve())
                summary[sid].setdefault(s.value, {})[fs.name] = {
                    "chosen_n": res.chosen_n,
                    "chosen_features": [feat_names[f] for f in res.ordering[:res.chosen_n]],
                    "test_chosen": float(res.test_curve()[res.chosen_n - 1]),
                    "test_all": float(res.test_curve()[-1]),
                }
    write_csv(out / "per-feature.csv", ["subject", "fold", "feature_index", "feature", "separability",
                                        "confidence", "f1e", "f1d", "f1de", "raw_f1de", "js_divergence"],
              feat_rows)
    table = []
    for s in strategies:
        tag = f"{s.value}-{target.value}"
        write_csv(out / f"ordering-{tag}.csv", ["subject", "fold", "rank", "feature_index", "feature"],
                  order_rows[s])
        write_csv(out / f"curve-{tag}.csv", ["subject", "fold", "n_features", "train_f1e", "train_f1de",
                                             "test_f1e", "test_f1d", "test_f1de", "raw_train_f1de",
                                             "raw_test_f1de"], curve_rows[s])
        tr = np.mean(mean_curves[s]["train"], axis=0)
        te = np.mean(mean_curves[s]["test"], axis=0)
        x = list(range(1, len(tr) + 1))
        plotting.line_chart(out / f"curve-{tag}.svg", x, {"train": tr, "test": te}, "number of features",
                            target.value, f"Feature selection ({s.value})", (0.0, 1.02))
        chosen = [v["chosen_n"] for sub in summary.values() for v in sub[s.value].values()]
        t_ch = [v["test_chosen"] for sub in summary.values() for v in sub[s.value].values()]
        t_all = [v["test_all"] for sub in summary.values() for v in sub[s.value].values()]
        table.append([s.value, float(np.mean(chosen)), float(np.mean(t_ch)), float(np.mean(t_all))])
    write_json(out / "selection-summary.json", {"target": target.value, "subjects": summary})
    write_run_manifest(out, "select", cfg, overrides)
    print(format_table(["strategy", "mean_chosen_n", f"test_{target.value}_chosen",
                        f"test_{target.value}_all"], table))
    return 0


def _compare_job(job):
    scheme, seed, pcfg, data = job
    cfg = with_scheme(pcfg, scheme, seed)
    cfg = replace(cfg, train=replace(cfg.train, seed=seed))
    return [(sid, cross_validate(t, cfg, n)) for sid, (n, t) in data.items()]


def cmd_compare(args) -> int:
    keys = ["features", "dim", "bins", "mode", "lr", "epochs", "seed", "seeds", "level_per_feature",
            "postprocess_window", "jobs"]
    cfg, overrides = resolve(args, keys)
    cfg["scheme"] = DEFAULTS["scheme"]
    pcfg = pipeline_config(cfg)
    data = load_feature_dir(cfg["features"])
    out = _out_dir(args)
    seeds = [int(cfg["seed"]) + k for k in range(int(cfg["seeds"]))]
    jobs = [(s, seed, pcfg, data) for s in Scheme for seed in seeds]
    results = _pmap(_compare_job, jobs, int(cfg["jobs"]))
    rows, table = [], []
    by_scheme: dict[Scheme, dict[str, list]] = {s: {"raw": [], "post": []} for s in Scheme}
    for (scheme, seed, _, _), per_subject in zip(jobs, results):
        for sid, res in per_subject:
            raw, post = res.mean_raw, res.mean_post
            rows.append([scheme.value, seed, sid, raw.f1e, raw.f1d, raw.f1de, post.f1e, post.f1d, post.f1de])
            by_scheme[scheme]["raw"].append(raw)
            by_scheme[scheme]["post"].append(post)
    for s in Scheme:
        raw, post = MeanReport.of(by_scheme[s]["raw"]), MeanReport.of(by_scheme[s]["post"])
        table.append([s.value, raw.f1e, raw.f1d, raw.f1de, post.f1e, post.f1d, post.f1de])
    header = ["scheme", "raw_f1e", "raw_f1d", "raw_f1de", "post_f1e", "post_f1d", "post_f1de"]
    write_csv(out / "compare.csv", ["scheme", "seed", "subject", *header[1:]], rows)
    write_csv(out / "compare-summary.csv", header, table)
    plotting.bar_chart(out / "compare.svg", [r[0] for r in table],
                       {"raw": [r[3] for r in table], "post-processed": [r[6] for r in table]},
                       "F1DEgmean", "Encoding schemes")
    write_run_manifest(out, "compare", cfg, overrides)
    print(format_table(header, table))
    return 0


def cmd_cost(args) -> int:
    cfg, overrides = resolve(args, ["dim", "bins", "num_feat", "num_ch", "level_per_feature"])
    out = _out_dir(args)
    rows = []
    for s in Scheme:
        try:
            enc = EncoderConfig(s, int(cfg["dim"]), int(cfg["num_feat"]), int(cfg["num_ch"]), int(cfg["bins"]),
                                level_per_feature=bool(cfg["level_per_feature"]))
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        r = cost_model(enc)
        rows.append([s.value, r.memory_bits, r.vector_dim, r.bind_ops, r.bundle_ops, r.threshold_ops,
                     r.bind_bit_ops, r.bit_ops])
    header = ["scheme", "memory_bits", "vector_dim", "bind_ops", "bundle_ops", "threshold_ops",
              "bind_bit_ops", "bit_ops"]
    write_csv(out / "cost.csv", header, rows)
    plotting.bar_chart(out / "cost.svg", [r[0] for r in rows],
                       {"memory bits": [r[1] for r in rows], "bit operations / window": [r[7] for r in rows]},
                       "count", "Item-memory storage and encoding cost", log=True)
    write_run_manifest(out, "cost", cfg, overrides)
    print(format_table(header, rows))
    return 0


# -- parser ------------------------------------------------------------------

def _parents() -> dict[str, argparse.ArgumentParser]:
    p = {}
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", required=True, help="output directory")
    common.add_argument("--config", help="JSON file of flag values (a run manifest works)")
    common.add_argument("-v", "--verbose", action="store_true")
    p["common"] = common

    enc = argparse.ArgumentParser(add_help=False)
    enc.add_argument("--dim", type=int, help="hypervector dimension D (default 19000)")
    enc.add_argument("--bins", type=int, help="quantization levels (default 20)")
    enc.add_argument("--seed", type=int, help="item-memory and training seed (default 0)")
    enc.add_argument("--level-per-feature", action="store_true", default=None,
                     help="separate level table per feature")
    p["enc"] = enc

    train = argparse.ArgumentParser(add_help=False)
    train.add_argument("--mode", choices=[m.value for m in Mode])
    train.add_argument("--lr", type=float, help="OnlineHD learning rate (default 0.5)")
    train.add_argument("--epochs", type=int)
    train.add_argument("--features", help="directory written by 'features'")
    p["train"] = train

    post = argparse.ArgumentParser(add_help=False)
    post.add_argument("--postprocess-window", type=float, help="smoothing window in s (default 5.0)")
    post.add_argument("--jobs", type=int, help="worker processes (default 1)")
    p["post"] = post
    return p


def build_parser() -> argparse.ArgumentParser:
    par = _parents()
    scheme_choices = [s.value for s in Scheme]
    parser = argparse.ArgumentParser(prog="hdeeg", description="Hyperdimensional EEG seizure detection toolkit")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", parents=[par["common"]], help="generate a synthetic dataset")
    p.add_argument("--spec", help="synthetic spec JSON (default: built-in planted-channel subject)")
    p.add_argument("--seed", type=int, help="override the spec seed")
    p.add_argument("--format", choices=["rawbin", "csv"])
    p.add_argument("--allow-null", action="store_true", default=None,
                   help="accept a spec without planted effects (chance-level control)")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("features", parents=[par["common"]], help="filter, window and extract features per fold")
    p.add_argument("--manifest", help="dataset manifest JSON")
    p.add_argument("--ratio", type=float, help="non-seizure to seizure ratio per fold (default 10)")
    p.add_argument("--seed", type=int, help="fold-selection seed (default 0)")
    p.add_argument("--window", type=float, help="window length in s (default 4.0)")
    p.add_argument("--step", type=float, help="window step in s (default 0.5)")
    p.add_argument("--band-low", type=float)
    p.add_argument("--band-high", type=float)
    p.add_argument("--filter-order", type=int)
    p.add_argument("--bins", type=int, help="bins for the divergence table (default 20)")
    p.add_argument("--jobs", type=int)
    p.set_defaults(func=cmd_features)

    p = sub.add_parser("train", parents=[par["common"], par["enc"], par["train"]],
                       help="train one model per subject on every fold")
    p.add_argument("--scheme", choices=scheme_choices)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", parents=[par["common"], par["enc"], par["train"], par["post"]],
                       help="leave-one-seizure-out evaluation")
    p.add_argument("--scheme", choices=scheme_choices)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("select", parents=[par["common"], par["enc"], par["train"], par["post"]],
                       help="per-feature analysis and feature selection (feat-append)")
    p.add_argument("--strategy", choices=[s.value for s in Strategy] + ["all"])
    p.add_argument("--metric", choices=[t.value for t in Target])
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("compare", parents=[par["common"], par["enc"], par["train"], par["post"]],
                       help="cross-validate every encoding scheme")
    p.add_argument("--seeds", type=int, help="number of seeds starting at --seed (default 1)")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("cost", parents=[par["common"]], help="memory and operation cost per scheme")
    p.add_argument("--dim", type=int)
    p.add_argument("--bins", type=int)
    p.add_argument("--num-feat", type=int)
    p.add_argument("--num-ch", type=int)
    p.add_argument("--level-per-feature", action="store_true", default=None)
    p.set_defaults(func=cmd_cost)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except HDError as exc:
        print(f"hdeeg {args.command}: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except FileNotFoundError as exc:
        print(f"hdeeg {args.command}: error: {exc}", file=sys.stderr)
        return DataError.exit_code


if __name__ == "__main__":
    sys.exit(main())
