"""Command-line interface: ``gwrnet train|classify|assess|eval|inspect|synth``.

Exit codes: 0 success, 2 usage or configuration error, 3 data or model error.
The log level is read from ``GWRNET_LOG_LEVEL`` (default ``WARNING``).
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import os
import re
import sys
from collections import Counter
from pathlib import Path

import numpy as np

from . import io
from .assessment import Assessor, FeedbackParams
from .evaluation import experiments as ex
from .evaluation.synthetic import SyntheticSpec, gen_exercise_corpus, gen_synthetic
from .gamma import GammaParams
from .hierarchy import LayerSpec, Pipeline, PipelineError, PipelineSpec, majority_vote, preset

log = logging.getLogger("gwrnet")

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 2, 3
PRECISION = 6
ARCHITECTURES = ("concat", "recurrent", "deep", "assessor")
REQUIRED_KEYS = ("architecture", "seed", "epochs", "n_joints", "hip_index")
CONFIG_KEYS = set(REQUIRED_KEYS) | {"window", "layers", "layer_params", "params", "motion", "eval"}


class UsageError(Exception):
    """Bad configuration or arguments (exit 2)."""


def fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "nan" if math.isnan(v) else f"{float(v):.{PRECISION}f}"
    return str(v)


def csv_text(header, rows) -> str:
    """Comma-separated table; fields never contain commas, quotes or newlines."""
    lines = [",".join(header)]
    for row in rows:
        fields = [fmt(v) for v in row]
        for f in fields:
            if any(c in f for c in ',"\n\r'):
                raise ValueError(f"field {f!r} cannot be written unquoted")
        lines.append(",".join(fields))
    return "\n".join(lines) + "\n"


# ------------------------------------------------------------------- config
def load_config(path) -> dict:
    try:
        cfg = json.loads(Path(path).read_text())
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(cfg, dict):
        raise UsageError("config must be a JSON object")
    for key in REQUIRED_KEYS:
        if key not in cfg:
            raise UsageError(f"missing config key: {key}")
    unknown = set(cfg) - CONFIG_KEYS
    if unknown:
        raise UsageError(f"unknown config key(s): {', '.join(sorted(unknown))}")
    if cfg["architecture"] not in ARCHITECTURES:
        raise UsageError(f"config key architecture: expected one of {', '.join(ARCHITECTURES)}")
    for key in ("seed", "epochs", "n_joints", "hip_index"):
        if not isinstance(cfg[key], int) or isinstance(cfg[key], bool) or cfg[key] < 0:
            raise UsageError(f"config key {key}: expected a non-negative integer")
    return cfg


def apply_overrides(cfg: dict, args) -> dict:
    cfg = dict(cfg)
    for key in ("seed", "epochs"):
        if getattr(args, key, None) is not None:
            cfg[key] = getattr(args, key)
    return cfg


def pipeline_spec(cfg: dict) -> PipelineSpec:
    common = {k: cfg[k] for k in ("n_joints", "hip_index", "seed", "epochs")}
    if "window" in cfg:
        common["window"] = cfg["window"]
    try:
        if "layers" in cfg:
            layers = cfg["layers"]
            spec = PipelineSpec([LayerSpec.from_dict(l) for l in layers["pose"]],
                                [LayerSpec.from_dict(l) for l in layers["motion"]],
                                LayerSpec.from_dict(layers["integration"]), **common)
        else:
            spec = preset(cfg["architecture"], **common)
        for slot, params in cfg.get("layer_params", {}).items():
            layer = _slot_layer(spec, slot)
            layer.params = {**layer.params, **params}
            layer.make_params()
        return spec
    except KeyError as exc:
        raise UsageError(f"missing config key: layers.{exc.args[0]}") from exc
    except (TypeError, ValueError) as exc:
        raise UsageError(f"config: {exc}") from exc


def build_pipeline(cfg: dict) -> Pipeline:
    try:
        return Pipeline(pipeline_spec(cfg))
    except PipelineError as exc:
        raise UsageError(f"config: {exc}") from exc


def _slot_layer(spec: PipelineSpec, slot: str) -> LayerSpec:
    if slot == "integration":
        return spec.integration
    m = re.fullmatch(r"(pose|motion)(\d+)", slot)
    layers = getattr(spec, m.group(1)) if m else []
    if not m or not 1 <= int(m.group(2)) <= len(layers):
        raise UsageError(f"config key layer_params.{slot}: no such layer")
    return layers[int(m.group(2)) - 1]


# ----------------------------------------------------------------- commands
def _report_rows(epoch_stats: dict):
    for slot, stats in epoch_stats.items():
        for e, s in enumerate(stats):
            yield (slot, e + 1, s.node_count, s.insertions, s.mean_activity,
                   s.mean_habituation_of_bmus, s.quantization_error)


REPORT_HEADER = ("layer", "epoch", "node_count", "insertions", "mean_activity",
                 "mean_habituation", "quantization_error")


def cmd_train(args) -> int:
    cfg = apply_overrides(load_config(args.config), args)
    data = io.read_data(args.data)
    if cfg["architecture"] == "assessor":
        try:
            params = GammaParams.from_dict({"K": 1, **cfg.get("params", {})})
        except (TypeError, ValueError) as exc:
            raise UsageError(f"config key params: {exc}") from exc
        model, stats = Assessor.fit(data, params, cfg["epochs"], cfg["seed"],
                                    cfg["hip_index"], cfg.get("motion", False))
        epoch_stats = {"assessor": stats}
    else:
        model = build_pipeline(cfg)
        epoch_stats = model.train_layerwise(data).epochs
    io.save_model(model, args.model)
    text = csv_text(REPORT_HEADER, _report_rows(epoch_stats))
    io.atomic_write(args.report or f"{args.model}.report.csv", text)
    sys.stdout.write(text)
    return EXIT_OK


CLASSIFY_HEADER = ("sequence", "subject", "truth", "window", "start", "label",
                   "confidence", "sequence_label", "error")


def classify_rows(pipe: Pipeline, sequences):
    for s in sequences:
        subj = "" if s.subject is None else s.subject
        truth = "" if s.label is None else s.label
        try:
            decisions = pipe.classify_sequence(s)
        except PipelineError as exc:
            yield (s.seq_id, subj, truth, "", "", "", "", "", str(exc).replace(",", ";"))
            continue
        seq_label = majority_vote([label for _, label, _ in decisions])
        for w, (start, label, conf) in enumerate(decisions):
            yield (s.seq_id, subj, truth, w, start, label, float(conf), seq_label, "")


def cmd_classify(args) -> int:
    pipe = _load(args.model, Pipeline)
    text = csv_text(CLASSIFY_HEADER, classify_rows(pipe, io.read_data(args.data)))
    _emit(text, args.out)
    return EXIT_OK


def _safe_name(name) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]", "_", str(name))


def cmd_assess(args) -> int:
    model = _load(args.model, Assessor)
    try:
        params = FeedbackParams(args.f_threshold, args.persistence, args.rollout or 30)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    out = Path(args.out_dir)
    summary, mistakes, rollout_rows = [], [], []
    for s in io.read_data(args.data):
        if s.n_joints != model.n_joints:
            raise io.DataFileError(f"sequence {s.seq_id} has {s.n_joints} joints, model expects {model.n_joints}")
        rep = model.detect(s, params)
        io.atomic_write(out / "feedback" / f"{_safe_name(s.seq_id)}.txt", rep.to_text(s.seq_id, PRECISION))
        summary.append((s.seq_id, len(rep.total), rep.flagged_frames, len(rep.spans),
                        rep.has_mistake, float(rep.total.max())))
        for span in rep.spans:
            mistakes.append((s.seq_id, span.start, span.end, len(span),
                             ";".join(str(j) for j in span.joints)))
        if args.rollout:
            for t, omega in enumerate(model.features(s)):
                for k, pred in enumerate(model.rollout(omega, args.rollout), start=1):
                    rollout_rows.append((s.seq_id, t, k, *pred))
    io.atomic_write(out / "summary.csv", csv_text(
        ("sequence", "frames", "flagged_frames", "spans", "mistake", "max_feedback"), summary))
    io.atomic_write(out / "mistakes.csv", csv_text(("sequence", "start", "end", "length", "joints"), mistakes))
    if args.rollout:
        dim = model.net.dim
        io.atomic_write(out / "rollout.csv", csv_text(
            ("sequence", "seed_frame", "step") + tuple(f"f{i}" for i in range(dim)), rollout_rows))
    sys.stdout.write(csv_text(("sequences", "with_mistakes", "spans"),
                              [(len(summary), sum(r[4] for r in summary), len(mistakes))]))
    return EXIT_OK


GNUPLOT = """\
# gnuplot script for the growth curves; run inside the output directory
set datafile separator ','
set key autotitle columnhead
set xlabel 'epoch'
set terminal pngcairo size 1200,900
set output 'growth.png'
set multiplot layout 2,2
set title 'nodes'
plot 'node_count.csv' using 1:2 with lines, '' using 1:3 with steps
set title 'quantization error'
plot 'quantization_error.csv' using 1:2 with lines, '' using 1:3 with lines
set title 'mean BMU activity'
plot 'mean_activity.csv' using 1:2 with lines, '' using 1:3 with lines
set title 'mean BMU habituation (GWR)'
plot 'mean_habituation.csv' using 1:2 with lines
unset multiplot
"""


def _eval_section(cfg: dict | None) -> dict:
    section = (cfg or {}).get("eval", {})
    unknown = set(section) - {"protocol", "k", "class_order", "test_subjects", "iris_epochs"}
    if unknown:
        raise UsageError(f"unknown config key(s): {', '.join('eval.' + k for k in sorted(unknown))}")
    return section


def cmd_eval(args) -> int:
    out = Path(args.out_dir)
    if args.experiment == "gng-vs-gwr":
        cfg = apply_overrides(load_config(args.config), args) if args.config else None
        section = _eval_section(cfg)
        X = _iris_or_data(args.data)
        epochs = args.epochs or section.get("iris_epochs", 30)
        seed = args.seed if args.seed is not None else (cfg or {}).get("seed", 0)
        curves = ex.compare_gng_gwr(X, epochs=epochs, seed=seed)
        g, n = curves["gwr"], curves["gng"]
        for name in ("node_count", "quantization_error", "mean_activity", "mean_habituation"):
            cols = [getattr(g, name), getattr(n, name)]
            io.atomic_write(out / f"{name}.csv",
                            csv_text(("epoch", "gwr", "gng"), [(e + 1, a, b) for e, (a, b) in enumerate(zip(*cols))]))
        if args.gnuplot:
            io.atomic_write(out / "growth.gp", GNUPLOT)
        sys.stdout.write(csv_text(("network", "final_nodes", "initial_qe", "final_qe"),
                                  [("gwr", g.node_count[-1], g.initial_qe, g.quantization_error[-1]),
                                   ("gng", n.node_count[-1], n.initial_qe, n.quantization_error[-1])]))
        return EXIT_OK

    if not args.config or not args.data:
        raise UsageError(f"--experiment {args.experiment} needs --config and --data")
    cfg = apply_overrides(load_config(args.config), args)
    if cfg["architecture"] == "assessor":
        raise UsageError("config key architecture: evaluation needs a classification pipeline")
    section = _eval_section(cfg)
    spec = build_pipeline(cfg).spec
    data = io.read_data(args.data)
    if any(s.label is None for s in data):
        raise io.DataFileError("evaluation needs a label on every sequence")
    if args.experiment == "cv":
        rep = ex.cross_validate(data, spec, section.get("protocol", "loso"), section.get("k", 5), cfg["seed"])
        m = rep.metrics
        io.atomic_write(out / "metrics.csv", csv_text(("metric", "value"), [
            ("accuracy", m.accuracy), ("window_accuracy", rep.window_accuracy),
            ("macro_precision", m.macro_precision), ("macro_recall", m.macro_recall), ("macro_f", m.macro_f)]))
        io.atomic_write(out / "per_class.csv", csv_text(("label", "precision", "recall", "f_score"),
                                                        [(l, m.precision[l], m.recall[l], m.f_score[l]) for l in m.labels]))
        io.atomic_write(out / "confusion.csv", csv_text(("truth",) + tuple(str(l) for l in m.labels),
                                                        [(l, *row) for l, row in zip(m.labels, m.confusion)]))
        io.atomic_write(out / "folds.csv", csv_text(("fold", "accuracy", "held_out"),
                                                    [(f, a, ";".join(map(str, ids)))
                                                     for f, (a, ids) in enumerate(zip(rep.fold_accuracy, rep.folds))]))
        sys.stdout.write(csv_text(("accuracy", "macro_f"), [(m.accuracy, m.macro_f)]))
        return EXIT_OK

    order = section.get("class_order") or sorted({s.label for s in data})
    order = [type(data[0].label)(c) for c in order]
    rep = ex.continual_protocol(data, order, spec, section.get("test_subjects"))
    rows = []
    for model_name, mat in (("growing", rep.growing), ("fixed", rep.fixed)):
        for p in range(len(order)):
            for c in range(p + 1):
                rows.append((model_name, p + 1, order[p], order[c], mat[p, c]))
    text = csv_text(("model", "phase", "trained_class", "class", "accuracy"), rows)
    io.atomic_write(out / "forgetting.csv", text)
    node_rows = [(m, p + 1, slot, n) for m, phases in rep.node_counts.items()
                 for p, counts in enumerate(phases) for slot, n in counts.items()]
    io.atomic_write(out / "node_counts.csv", csv_text(("model", "phase", "layer", "nodes"), node_rows))
    sys.stdout.write(text)
    return EXIT_OK


def _iris_or_data(path):
    if path is None:
        return ex.load_iris()[0]
    seqs = io.read_data(path)
    return np.vstack([s.frames.reshape(len(s.frames), -1) for s in seqs])


def _net_summary(name: str, net) -> list[str]:
    lines = [f"[{name}] kind={net.kind} dim={net.dim} nodes={net.node_count} edges={len(net.edges)}"]
    majority = Counter(net.node_label(i)[0] for i in net.ids if net.label_counts[net.row(i)])
    unlabeled = net.node_count - sum(majority.values())
    totals = net.label_totals()
    for lab in sorted(set(majority) | set(totals), key=repr):
        lines.append(f"  label {lab}: nodes={majority.get(lab, 0)} presentations={totals.get(lab, 0)}")
    if unlabeled and (majority or totals):
        lines.append(f"  unlabeled nodes={unlabeled}")
    for k, v in net.params.to_dict().items():
        lines.append(f"  param {k}={v}")
    return lines


def cmd_inspect(args) -> int:
    model = io.load_model(args.model)
    kind = io._kind_of(model)
    lines = [f"format {io.FORMAT} version {io.FORMAT_VERSION}", f"kind {kind}"]
    if kind == "pipeline":
        lines.append("spec " + json.dumps(model.spec.to_dict(), sort_keys=True))
        nets = list(model.nets.items())
    elif kind == "assessor":
        lines.append(f"n_joints {model.n_joints} hip_index {model.hip_index} motion {int(model.motion)}")
        nets = [("assessor", model.net)]
    else:
        nets = [(kind, model)]
    for name, net in nets:
        lines.extend(_net_summary(name, net))
    sys.stdout.write("\n".join(lines) + "\n")
    return EXIT_OK


def cmd_synth(args) -> int:
    if args.kind == "actions":
        seqs = gen_synthetic(SyntheticSpec(classes=args.classes, subjects=args.subjects,
                                           frames=args.frames, seed=args.seed))
    else:
        seqs = gen_exercise_corpus(args.correct, args.incorrect, n_frames=args.frames, seed=args.seed)
    io.write_data(args.out, seqs)
    return EXIT_OK


def _load(path, cls):
    model = io.load_model(path)
    if not isinstance(model, cls):
        raise io.ModelFileError(f"{path} holds a {io._kind_of(model)} model; this command needs a {cls.__name__.lower()}")
    return model


def _emit(text: str, out) -> None:
    if out:
        io.atomic_write(out, text)
    else:
        sys.stdout.write(text)


# ------------------------------------------------------------------- parser
def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gwrnet", description="Growing self-organizing networks for skeleton motion.")
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("train", help="train a pipeline or assessor from a config and a data file")
    t.add_argument("config")
    t.add_argument("data")
    t.add_argument("model", help="output model file")
    t.add_argument("--report", help="training report CSV (default: MODEL.report.csv)")
    t.add_argument("--seed", type=int)
    t.add_argument("--epochs", type=int)
    t.set_defaults(func=cmd_train)

    c = sub.add_parser("classify", help="label every window and sequence of a data file")
    c.add_argument("model")
    c.add_argument("data")
    c.add_argument("--out", help="output CSV (default: stdout)")
    c.set_defaults(func=cmd_classify)

    a = sub.add_parser("assess", help="feedback and mistake spans for each sequence")
    a.add_argument("model")
    a.add_argument("data")
    a.add_argument("--out-dir", required=True)
    a.add_argument("--f-threshold", type=float, default=FeedbackParams.threshold)
    a.add_argument("--persistence", type=int, default=FeedbackParams.persistence)
    a.add_argument("--rollout", type=int, metavar="N", help="also emit N predicted frames per seed frame")
    a.set_defaults(func=cmd_assess)

    e = sub.add_parser("eval", help="run an evaluation protocol")
    e.add_argument("--experiment", required=True, choices=("gng-vs-gwr", "continual", "cv"))
    e.add_argument("--config")
    e.add_argument("--data")
    e.add_argument("--out-dir", required=True)
    e.add_argument("--seed", type=int)
    e.add_argument("--epochs", type=int)
    e.add_argument("--gnuplot", action="store_true", help="also write growth.gp (gng-vs-gwr)")
    e.set_defaults(func=cmd_eval)

    i = sub.add_parser("inspect", help="summarize a model file")
    i.add_argument("model")
    i.set_defaults(func=cmd_inspect)

    s = sub.add_parser("synth", help="write a synthetic data file")
    s.add_argument("kind", choices=("actions", "exercise"))
    s.add_argument("out")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--classes", type=int, default=3)
    s.add_argument("--subjects", type=int, default=5)
    s.add_argument("--frames", type=int, default=None)
    s.add_argument("--correct", type=int, default=20)
    s.add_argument("--incorrect", type=int, default=20)
    s.set_defaults(func=cmd_synth)
    return p


def main(argv=None) -> int:
    logging.basicConfig(level=os.environ.get("GWRNET_LOG_LEVEL", "WARNING").upper(),
                        format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    if getattr(args, "frames", 0) is None:
        args.frames = 60 if args.kind == "actions" else 300
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"gwrnet: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (io.ModelFileError, io.DataFileError, PipelineError) as exc:
        print(f"gwrnet: error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
