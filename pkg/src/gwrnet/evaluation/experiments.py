"""Evaluation protocols: GNG-vs-GWR growth, cross-validation, sequential-class training."""
from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field, replace
from importlib import resources

import numpy as np

from ..features import Sequence
from ..gamma import GammaGWR
from ..gng import GNG, GngParams
from ..gwr import GWR, GwrParams
from ..hierarchy import Pipeline, PipelineSpec
from .metrics import ClassificationReport, classification_metrics

log = logging.getLogger(__name__)

#: Parameters used for the growth comparison on standardized Iris.
IRIS_GWR_PARAMS = GwrParams(activation_threshold=0.5)
IRIS_GNG_PARAMS = GngParams(lambda_interval=150)


def load_iris(standardize: bool = True) -> tuple[np.ndarray, list[str]]:
    """The bundled 150x4 Iris table, z-scored per column by default."""
    with resources.files("gwrnet.data").joinpath("iris.csv").open() as fh:
        rows = list(csv.DictReader(fh))
    X = np.array([[float(r[k]) for k in ("sepal_length", "sepal_width", "petal_length", "petal_width")]
                  for r in rows])
    if standardize:
        X = (X - X.mean(axis=0)) / X.std(axis=0)
    return X, [r["species"] for r in rows]


# --------------------------------------------------------------------------
# GNG vs GWR
# --------------------------------------------------------------------------

@dataclass
class GrowthCurves:
    node_count: list = field(default_factory=list)
    quantization_error: list = field(default_factory=list)
    mean_activity: list = field(default_factory=list)
    mean_habituation: list = field(default_factory=list)
    initial_qe: float = float("nan")


def compare_gng_gwr(data, epochs: int = 30, seed: int = 0,
                    gwr_params: GwrParams | None = None,
                    gng_params: GngParams | None = None) -> dict[str, GrowthCurves]:
    """Per-epoch growth curves of a GWR and a GNG trained on the same shuffles."""
    X = np.asarray(data, dtype=np.float64)
    out = {}
    for name, net in (("gwr", GWR(X.shape[1], gwr_params or IRIS_GWR_PARAMS, seed=seed)),
                      ("gng", GNG(X.shape[1], gng_params or IRIS_GNG_PARAMS, seed=seed))):
        curves = GrowthCurves(initial_qe=net.quantization_error(X))
        for e in range(epochs):
            s = net.train_epoch(X, shuffle_seed=seed * 1009 + e)
            curves.node_count.append(s.node_count)
            curves.quantization_error.append(s.quantization_error)
            curves.mean_activity.append(s.mean_activity)
            curves.mean_habituation.append(s.mean_habituation_of_bmus)
        out[name] = curves
    return out


def plateau_epoch(counts, rel_tol: float = 0.05) -> int:
    """First epoch after which the node count stays within ``rel_tol`` of its final value."""
    final = counts[-1]
    tol = max(1.0, rel_tol * final)
    e = len(counts) - 1
    while e > 0 and abs(counts[e - 1] - final) <= tol:
        e -= 1
    return e


# --------------------------------------------------------------------------
# Cross-validation
# --------------------------------------------------------------------------

@dataclass
class EvalReport:
    metrics: ClassificationReport
    fold_accuracy: list
    folds: list  # list of lists of sequence ids held out per fold
    window_accuracy: float = float("nan")

    @property
    def accuracy(self) -> float:
        return self.metrics.accuracy


def make_folds(dataset: list[Sequence], protocol: str = "loso", k: int = 5, seed: int = 0) -> list[list[int]]:
    """Indices of held-out sequences per fold.

    Membership depends only on subject or sequence ids and ``seed``, never on
    the order of ``dataset``.
    """
    if not dataset:
        raise ValueError("empty dataset")
    if protocol == "loso":
        if any(s.subject is None for s in dataset):
            raise ValueError("leave-one-subject-out needs subject ids on every sequence")
        subjects = sorted({s.subject for s in dataset})
        if len(subjects) < 2:
            raise ValueError("leave-one-subject-out needs at least two subjects")
        return [[i for i, s in enumerate(dataset) if s.subject == subj] for subj in subjects]
    if protocol == "kfold":
        if k < 2 or k > len(dataset):
            raise ValueError(f"k must lie in 2..{len(dataset)}, got {k}")
        ids = [s.seq_id for s in dataset]
        if any(i is None for i in ids) or len(set(ids)) != len(ids):
            raise ValueError("k-fold needs unique sequence ids")
        order = sorted(ids, key=repr)
        perm = np.random.default_rng(seed).permutation(len(order))
        fold_of = {order[p]: rank % k for rank, p in enumerate(perm)}
        return [[i for i, s in enumerate(dataset) if fold_of[s.seq_id] == f] for f in range(k)]
    raise ValueError(f"unknown protocol {protocol!r}")


def cross_validate(dataset: list[Sequence], spec: PipelineSpec, protocol: str = "loso", k: int = 5,
                   seed: int = 0, epochs: int | None = None) -> EvalReport:
    """Train a fresh pipeline per fold and pool the held-out sequence predictions."""
    folds = make_folds(dataset, protocol, k, seed)
    pred, truth, fold_acc, win_hits, win_total = [], [], [], 0, 0
    for f, test_idx in enumerate(folds):
        held = set(test_idx)
        train = [s for i, s in enumerate(dataset) if i not in held]
        test = [dataset[i] for i in test_idx]
        pipe = Pipeline(replace(spec, seed=seed * 7919 + f))
        pipe.train_layerwise(train, epochs)
        hits = 0
        for s in test:
            decisions = pipe.classify_sequence(s)
            win_hits += sum(lab == s.label for _, lab, _ in decisions)
            win_total += len(decisions)
            p = pipe.predict_sequence(s)
            pred.append(p)
            truth.append(s.label)
            hits += p == s.label
        fold_acc.append(hits / len(test))
        log.info("fold %d: accuracy %.3f", f, fold_acc[-1])
    labels = sorted({s.label for s in dataset})
    return EvalReport(classification_metrics(pred, truth, labels), fold_acc,
                      [[dataset[i].seq_id for i in fold] for fold in folds],
                      win_hits / win_total if win_total else float("nan"))


# --------------------------------------------------------------------------
# Sequential-class (continual) training
# --------------------------------------------------------------------------

@dataclass
class ContinualReport:
    class_order: list
    growing: np.ndarray  # [phase, class position]; NaN where the class is not yet seen
    fixed: np.ndarray
    node_counts: dict = field(default_factory=dict)


def _class_accuracy(pipe: Pipeline, test: list[Sequence], label) -> float:
    """Fraction of integration steps whose BMU carries ``label`` (unlabeled BMUs miss)."""
    seqs = [s for s in test if s.label == label]
    if not seqs:
        raise ValueError(f"no test sequences for class {label!r}")
    net = pipe.nets["integration"]
    hits = total = 0
    for s in seqs:
        X = pipe.integration_input(s.frames)
        ids = net.trace(X)[0] if isinstance(net, GammaGWR) else [net.bmu(x) for x in X]
        for i in ids:
            hits += bool(net.label_counts[net.row(i)]) and net.node_label(i)[0] == label
            total += 1
    return hits / total


def continual_protocol(dataset: list[Sequence], class_order, spec: PipelineSpec,
                       test_subjects=None, epochs: int | None = None) -> ContinualReport:
    """Train on one class at a time without replay; score every class seen so far.

    Runs the growing pipeline and a fixed-capacity twin whose networks are
    capped at their phase-1 size. Sequences of ``test_subjects`` (default: the
    last subject) are held out for scoring. A class is scored by the fraction
    of integration steps on its test sequences whose BMU carries its label.
    """
    class_order = list(class_order)
    if len(class_order) < 2:
        raise ValueError("continual protocol needs at least two classes")
    if test_subjects is None:
        test_subjects = [max(s.subject for s in dataset)]
    test_subjects = set(test_subjects)
    train = [s for s in dataset if s.subject not in test_subjects]
    test = [s for s in dataset if s.subject in test_subjects]

    n = len(class_order)
    matrices = {"growing": np.full((n, n), np.nan), "fixed": np.full((n, n), np.nan)}
    pipes = {"growing": Pipeline(spec), "fixed": Pipeline(spec)}
    counts: dict = {"growing": [], "fixed": []}
    for phase, label in enumerate(class_order):
        phase_data = [s for s in train if s.label == label]
        if not phase_data:
            raise ValueError(f"no training sequences for class {label!r}")
        for name, pipe in pipes.items():
            if phase == 0 and name == "fixed":
                # identical phase-1 training: reuse the growing pipeline's state
                pipe.nets = {k: type(v).from_dict(v.to_dict()) for k, v in pipes["growing"].nets.items()}
                pipe.frozen = dict(pipes["growing"].frozen)
                pipe.cap_capacity()
            else:
                pipe.train_layerwise(phase_data, epochs, resume=phase > 0)
            for c in range(phase + 1):
                matrices[name][phase, c] = _class_accuracy(pipe, test, class_order[c])
            counts[name].append({k: v.node_count for k, v in pipe.nets.items()})
    return ContinualReport(class_order, matrices["growing"], matrices["fixed"], counts)
