"""Motion assessment with a Gamma-GWR (K=1) trained on correct executions.

The network predicts the next frame as the weight of the node whose context
descriptor best matches the current frame; the distance between the
observed frame and that prediction is the feedback signal. Sustained
feedback above a threshold marks an execution mistake.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .features import joint_groups, pose_motion_features
from .gamma import GammaGWR
from .graph import as_vector


@dataclass(frozen=True)
class FeedbackParams:
    threshold: float = 0.7
    persistence: int = 100
    rollout_horizon: int = 30

    def __post_init__(self):
        if self.threshold <= 0:
            raise ValueError("feedback threshold must be positive")
        if self.persistence < 1 or self.rollout_horizon < 1:
            raise ValueError("persistence and rollout horizon must be >= 1")


@dataclass
class MistakeSpan:
    start: int
    end: int  # inclusive
    joints: list

    def __len__(self) -> int:
        return self.end - self.start + 1


@dataclass
class FeedbackReport:
    total: np.ndarray       # (T-1,) feedback at t = 1..T-1
    per_joint: np.ndarray   # (T-1, J)
    spans: list = field(default_factory=list)
    threshold: float = 0.7
    persistence: int = 100

    @property
    def has_mistake(self) -> bool:
        return bool(self.spans)

    @property
    def flagged_frames(self) -> int:
        return int(np.sum(self.total > self.threshold))

    def to_text(self, name: str = "sequence", precision: int = 6) -> str:
        """One line per timestep (``t f j0 .. jJ-1``) followed by a summary block."""
        fmt = f"{{:.{precision}f}}"
        J = self.per_joint.shape[1]
        lines = [f"# feedback {name}", "# t total " + " ".join(f"j{j}" for j in range(J))]
        for t, (f, pj) in enumerate(zip(self.total, self.per_joint), start=1):
            lines.append(" ".join([str(t), fmt.format(f)] + [fmt.format(v) for v in pj]))
        lines.append("# summary")
        lines.append(f"threshold {fmt.format(self.threshold)}")
        lines.append(f"persistence {self.persistence}")
        lines.append(f"frames {len(self.total)}")
        lines.append(f"flagged_frames {self.flagged_frames}")
        lines.append(f"spans {len(self.spans)}")
        for s in self.spans:
            joints = ",".join(str(j) for j in s.joints) or "-"
            lines.append(f"span {s.start} {s.end} {joints}")
        return "\n".join(lines) + "\n"


def _check_net(net) -> None:
    if not isinstance(net, GammaGWR):
        raise TypeError("assessment needs a Gamma-GWR network")
    if net.K != 1:
        raise ValueError(f"assessment is defined for K=1 context networks, got K={net.K}")
    if not net.edges:
        raise ValueError("network is not trained")


def _predict_row(net: GammaGWR, omega_prev: np.ndarray) -> int:
    diff = net.contexts[:, 0, :] - omega_prev
    return int(np.argmin(np.sqrt(np.einsum("ij,ij->i", diff, diff))))


def predict_next(net: GammaGWR, omega_prev) -> np.ndarray:
    """Weight of the node whose context is nearest to ``omega_prev``."""
    _check_net(net)
    omega_prev = as_vector(omega_prev, net.dim)
    return net.weights[_predict_row(net, omega_prev)].copy()


def rollout(net: GammaGWR, omega_seed, steps: int) -> np.ndarray:
    """Iterate :func:`predict_next` ``steps`` times, feeding predictions back."""
    _check_net(net)
    if steps < 1:
        raise ValueError("steps must be >= 1")
    cur = as_vector(omega_seed, net.dim)
    out = np.empty((steps, net.dim))
    for i in range(steps):
        cur = net.weights[_predict_row(net, cur)]
        out[i] = cur
    return out


def feedback(net: GammaGWR, omega_t, omega_prev, n_joints: int | None = None) -> tuple[float, np.ndarray]:
    """Norm of the prediction residual and its per-joint breakdown.

    ``n_joints`` defaults to ``dim / 3``; a pose+motion feature space
    (``dim = 6J``) needs it passed explicitly.
    """
    _check_net(net)
    omega_t = as_vector(omega_t, net.dim)
    residual = omega_t - predict_next(net, omega_prev)
    groups = joint_groups(net.dim, n_joints or net.dim // 3)
    per_joint = np.array([math.sqrt(float(residual[g] @ residual[g])) for g in groups])
    return float(np.linalg.norm(residual)), per_joint


def feedback_series(net: GammaGWR, seq, n_joints: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Feedback at t = 1..T-1 for a ``(T, dim)`` feature sequence.

    Costs one pass over the nodes per timestep.
    """
    _check_net(net)
    X = np.asarray(seq, dtype=np.float64).reshape(-1, net.dim)
    if len(X) < 2:
        raise ValueError("assessment needs at least two frames")
    groups = joint_groups(net.dim, n_joints or net.dim // 3)
    total = np.empty(len(X) - 1)
    per_joint = np.empty((len(X) - 1, len(groups)))
    for t in range(1, len(X)):
        residual = X[t] - net.weights[_predict_row(net, X[t - 1])]
        total[t - 1] = np.linalg.norm(residual)
        per_joint[t - 1] = [math.sqrt(float(residual[g] @ residual[g])) for g in groups]
    return total, per_joint


def find_spans(total: np.ndarray, threshold: float, persistence: int) -> list[tuple[int, int]]:
    """Maximal runs (inclusive, 1-based timesteps) with ``total > threshold`` lasting >= ``persistence``."""
    spans, start = [], None
    above = np.asarray(total) > threshold
    for i, a in enumerate(above):
        if a and start is None:
            start = i
        elif not a and start is not None:
            if i - start >= persistence:
                spans.append((start + 1, i))
            start = None
    if start is not None and len(above) - start >= persistence:
        spans.append((start + 1, len(above)))
    return spans


def detect_mistakes(net: GammaGWR, seq, params: FeedbackParams | None = None,
                    n_joints: int | None = None) -> FeedbackReport:
    """Feedback report with mistake spans and the joints responsible for them.

    A joint is blamed for a span when its mean deviation over the span
    exceeds ``threshold / sqrt(J)``.
    """
    params = params or FeedbackParams()
    total, per_joint = feedback_series(net, seq, n_joints)
    J = per_joint.shape[1]
    joint_limit = params.threshold / math.sqrt(J)
    spans = []
    for s, e in find_spans(total, params.threshold, params.persistence):
        mean_dev = per_joint[s - 1 : e].mean(axis=0)
        spans.append(MistakeSpan(s, e, [int(j) for j in np.flatnonzero(mean_dev > joint_limit)]))
    return FeedbackReport(total, per_joint, spans, params.threshold, params.persistence)


@dataclass
class FeedbackTable:
    TP: int
    FN: int
    TN: int
    FP: int
    TPR: float
    TNR: float
    PPV: float
    undefined: tuple = ()

    def rounded(self, digits: int = 2) -> dict:
        return {k: round(getattr(self, k), digits) for k in ("TPR", "TNR", "PPV")}


def _rate(num: int, den: int, name: str, undefined: list) -> float:
    # empty denominators are reported as 1.0 and flagged
    if den == 0:
        undefined.append(name)
        return 1.0
    return num / den


def confusion_rates(TP: int, FN: int, TN: int, FP: int) -> FeedbackTable:
    undefined: list = []
    tpr = _rate(TP, TP + FN, "TPR", undefined)
    tnr = _rate(TN, TN + FP, "TNR", undefined)
    ppv = _rate(TP, TP + FP, "PPV", undefined)
    return FeedbackTable(TP, FN, TN, FP, tpr, tnr, ppv, tuple(undefined))


def evaluate_feedback(reports, ground_truth, mode: str = "sequence", frame_truth=None) -> FeedbackTable:
    """Confusion counts of mistake detection against ground truth.

    ``mode="sequence"``: a sequence counts as positive when it has a span and
    ``ground_truth`` holds one bool per sequence (True = incorrect execution).
    ``mode="frame"``: every timestep is judged on its own; ``frame_truth``
    holds one boolean array per report aligned with its feedback series, and
    a timestep is positive when it lies inside a span.
    """
    reports = list(reports)
    if mode == "sequence":
        truth = list(ground_truth)
        if len(truth) != len(reports):
            raise ValueError("reports and ground truth differ in length")
        pred = [r.has_mistake for r in reports]
    elif mode == "frame":
        if frame_truth is None or len(frame_truth) != len(reports):
            raise ValueError("frame mode needs one truth array per report")
        pred, truth = [], []
        for r, ft in zip(reports, frame_truth):
            ft = np.asarray(ft, dtype=bool)
            if len(ft) != len(r.total):
                raise ValueError("frame truth does not match the feedback length")
            inside = np.zeros(len(r.total), dtype=bool)
            for s in r.spans:
                inside[s.start - 1 : s.end] = True
            pred.extend(inside.tolist())
            truth.extend(ft.tolist())
    else:
        raise ValueError(f"unknown counting mode {mode!r}")
    TP = sum(p and t for p, t in zip(pred, truth))
    FN = sum((not p) and t for p, t in zip(pred, truth))
    TN = sum((not p) and (not t) for p, t in zip(pred, truth))
    FP = sum(p and (not t) for p, t in zip(pred, truth))
    return confusion_rates(TP, FN, TN, FP)


class Assessor:
    """A K=1 Gamma-GWR together with the feature extraction it was trained on."""

    kind = "assessor"

    def __init__(self, net: GammaGWR, n_joints: int, hip_index: int, motion: bool = False):
        if not isinstance(net, GammaGWR) or net.K != 1:
            raise ValueError("an assessor needs a K=1 Gamma-GWR")
        self.net = net
        self.n_joints = n_joints
        self.hip_index = hip_index
        self.motion = motion

    @classmethod
    def fit(cls, sequences, params=None, epochs: int = 30, seed: int = 0,
            hip_index: int = 0, motion: bool = False) -> tuple["Assessor", list]:
        """Train on correct executions only; returns the assessor and per-epoch stats."""
        from .gamma import GammaParams

        params = params or GammaParams(K=1)
        if params.K != 1:
            raise ValueError("assessment networks use K=1")
        seqs = list(sequences)
        if not seqs:
            raise ValueError("no training sequences")
        n_joints = seqs[0].n_joints if hasattr(seqs[0], "n_joints") else np.asarray(seqs[0]).shape[1]
        feats = [pose_motion_features(s, hip_index, motion) for s in seqs]
        net = GammaGWR(feats[0].shape[1], params, seed=seed)
        stats = [net.train_epoch(feats, shuffle_seed=seed * 100003 + e) for e in range(epochs)]
        return cls(net, n_joints, hip_index, motion), stats

    def features(self, seq) -> np.ndarray:
        return pose_motion_features(seq, self.hip_index, self.motion)

    def detect(self, seq, params: FeedbackParams | None = None) -> FeedbackReport:
        return detect_mistakes(self.net, self.features(seq), params, self.n_joints)

    def rollout(self, omega_seed, steps: int) -> np.ndarray:
        return rollout(self.net, omega_seed, steps)

    def to_dict(self) -> dict:
        return {"net": self.net.to_dict(), "n_joints": self.n_joints,
                "hip_index": self.hip_index, "motion": self.motion}

    @classmethod
    def from_dict(cls, state: dict) -> "Assessor":
        return cls(GammaGWR.from_dict(state["net"]), int(state["n_joints"]),
                   int(state["hip_index"]), bool(state["motion"]))
