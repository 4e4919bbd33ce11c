"""Two-stream hierarchies of growing networks for sequence classification.

Pose and motion features run through parallel stacks of networks; the
per-timestep outputs of both stacks are concatenated and fed to an
integration network that carries the label counts.

Each layer may widen its temporal receptive field by concatenating ``q``
consecutive inputs (``concat`` preset) or rely on the Gamma-GWR context
(``recurrent`` preset), and may MAX-pool its BMU weights over fixed-size
feature groups before handing them on (``deep`` preset).
"""
from __future__ import annotations

import hashlib
import logging
from collections import Counter
from dataclasses import dataclass, field, replace
from typing import Hashable, Optional

import numpy as np

from .features import Sequence, center_sequence, concat_trajectory, flatten_frames, pool_groups
from .gamma import GammaGWR, GammaParams
from .gwr import GWR, EpochStats, GwrParams

log = logging.getLogger(__name__)

KINDS = ("gwr", "gamma")
PRESETS = ("concat", "recurrent", "deep")


class PipelineError(ValueError):
    """Dimension or schedule violation, naming the offending layer."""


@dataclass
class LayerSpec:
    kind: str = "gwr"
    params: dict = field(default_factory=dict)
    q: int = 1
    pool: Optional[int] = None
    input_dim: Optional[int] = None

    def make_params(self):
        return (GammaParams if self.kind == "gamma" else GwrParams).from_dict(dict(self.params))

    def to_dict(self) -> dict:
        return {"kind": self.kind, "params": dict(self.params), "q": self.q,
                "pool": self.pool, "input_dim": self.input_dim}

    @classmethod
    def from_dict(cls, d: dict) -> "LayerSpec":
        unknown = set(d) - {"kind", "params", "q", "pool", "input_dim"}
        if unknown:
            raise ValueError(f"unknown layer key(s): {', '.join(sorted(unknown))}")
        return cls(**d)


@dataclass
class PipelineSpec:
    pose: list
    motion: list
    integration: LayerSpec
    n_joints: int = 13
    hip_index: int = 0
    window: int = 10
    epochs: int = 30
    seed: int = 0

    def to_dict(self) -> dict:
        return {
            "pose": [l.to_dict() for l in self.pose],
            "motion": [l.to_dict() for l in self.motion],
            "integration": self.integration.to_dict(),
            "n_joints": self.n_joints, "hip_index": self.hip_index,
            "window": self.window, "epochs": self.epochs, "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PipelineSpec":
        d = dict(d)
        d["pose"] = [LayerSpec.from_dict(l) for l in d["pose"]]
        d["motion"] = [LayerSpec.from_dict(l) for l in d["motion"]]
        d["integration"] = LayerSpec.from_dict(d["integration"])
        return cls(**d)


def preset(name: str, n_joints: int = 13, hip_index: int = 0, **overrides) -> PipelineSpec:
    """Ready-made architectures.

    ``concat``: two GWR layers per stream, the second on trajectories of 3,
    then a GWR integration layer. ``recurrent``: one GWR layer per stream and
    a Gamma-GWR integration layer. ``deep``: Gamma-GWR layers with per-joint
    MAX pooling between them.
    """
    if name == "concat":
        pose = [LayerSpec("gwr", {}), LayerSpec("gwr", {}, q=3)]
        motion = [LayerSpec("gwr", {}), LayerSpec("gwr", {}, q=3)]
        integration = LayerSpec("gwr", {})
    elif name == "recurrent":
        pose = [LayerSpec("gwr", {})]
        motion = [LayerSpec("gwr", {})]
        integration = LayerSpec("gamma", {"K": 2})
    elif name == "deep":
        pose = [LayerSpec("gamma", {"K": 1}, pool=3), LayerSpec("gamma", {"K": 1})]
        motion = [LayerSpec("gamma", {"K": 1}, pool=3), LayerSpec("gamma", {"K": 1})]
        integration = LayerSpec("gamma", {"K": 2})
    else:
        raise ValueError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")
    spec = PipelineSpec(pose, motion, integration, n_joints=n_joints, hip_index=hip_index)
    return replace(spec, **overrides)


@dataclass
class TrainingReport:
    epochs: dict = field(default_factory=dict)  # slot -> list[EpochStats]

    def rows(self):
        for slot, stats in self.epochs.items():
            for e, s in enumerate(stats):
                yield slot, e, s


def _slot_names(spec: PipelineSpec) -> list[str]:
    return ([f"pose{i + 1}" for i in range(len(spec.pose))]
            + [f"motion{i + 1}" for i in range(len(spec.motion))] + ["integration"])


def _net_digest(net) -> str:
    h = hashlib.sha256()
    h.update(net.weights.tobytes())
    h.update(net.habituation.tobytes())
    if isinstance(net, GammaGWR):
        h.update(net.contexts.tobytes())
    h.update(repr(sorted(net.edges.items())).encode())
    return h.hexdigest()


class Pipeline:
    def __init__(self, spec: PipelineSpec):
        self.spec = spec
        self.nets: dict[str, object] = {}
        self.frozen: dict[str, bool] = {}
        self.dims: dict[str, int] = {}
        self._plan()

    # ------------------------------------------------------------ planning
    def _plan(self) -> None:
        """Dimension arithmetic for every layer; raises naming the bad layer."""
        spec = self.spec
        if spec.n_joints < 1 or spec.window < 2:
            raise PipelineError("n_joints must be >= 1 and window >= 2")
        if not spec.pose or not spec.motion:
            raise PipelineError("each stream needs at least one layer")
        if not 0 <= spec.hip_index < spec.n_joints:
            raise PipelineError(f"hip_index {spec.hip_index} outside 0..{spec.n_joints - 1}")
        frame_dim = 3 * spec.n_joints
        self._shrink = {}
        stream_out = {}
        for stream, layers in (("pose", spec.pose), ("motion", spec.motion)):
            dim, shrink = frame_dim, 0
            for i, layer in enumerate(layers):
                name = f"{stream}{i + 1}"
                dim, shrink = self._plan_layer(name, layer, dim, shrink)
            stream_out[stream] = dim
            self._shrink[stream] = shrink
        dim = stream_out["pose"] + stream_out["motion"]
        shrink = max(self._shrink.values())
        dim, shrink = self._plan_layer("integration", spec.integration, dim, shrink)
        self._shrink["integration"] = shrink
        # a window of W frames yields W - 1 transitions
        if spec.window - 1 - shrink < 1:
            raise PipelineError(
                f"window of {spec.window} frames is too short for the trajectory windows (needs > {shrink + 1})")

    def _plan_layer(self, name: str, layer: LayerSpec, dim: int, shrink: int) -> tuple[int, int]:
        if layer.kind not in KINDS:
            raise PipelineError(f"layer {name}: unknown kind {layer.kind!r}")
        if layer.q < 1:
            raise PipelineError(f"layer {name}: q must be >= 1")
        in_dim = dim * layer.q
        if layer.input_dim is not None and layer.input_dim != in_dim:
            raise PipelineError(f"layer {name}: expects input dimension {layer.input_dim} "
                                f"but receives {in_dim}")
        try:
            layer.make_params()
        except (TypeError, ValueError) as exc:
            raise PipelineError(f"layer {name}: {exc}") from exc
        self.dims[name] = in_dim
        out = in_dim
        if layer.pool is not None:
            if layer.pool < 1 or in_dim % layer.pool:
                raise PipelineError(f"layer {name}: output dimension {in_dim} "
                                    f"is not divisible into pooling groups of {layer.pool}")
            out = in_dim // layer.pool
        return out, shrink + layer.q - 1

    def _layer(self, name: str) -> LayerSpec:
        if name == "integration":
            return self.spec.integration
        stream = "pose" if name.startswith("pose") else "motion"
        return getattr(self.spec, stream)[int(name[len(stream):]) - 1]

    def _new_net(self, name: str):
        layer = self._layer(name)
        seed = self.spec.seed * 1000 + _slot_names(self.spec).index(name)
        cls = GammaGWR if layer.kind == "gamma" else GWR
        return cls(self.dims[name], layer.make_params(), seed=seed)

    @property
    def trained(self) -> bool:
        return "integration" in self.nets

    def digests(self) -> dict[str, str]:
        return {name: _net_digest(net) for name, net in self.nets.items()}

    def cap_capacity(self) -> None:
        """Freeze every network's size at its current node count."""
        for net in self.nets.values():
            net.params = replace(net.params, max_nodes=max(net.node_count, 2))

    # ------------------------------------------------------------- forward
    def _base_features(self, frames: np.ndarray) -> dict[str, np.ndarray]:
        if frames.shape[1] != self.spec.n_joints:
            raise PipelineError(f"input frames have {frames.shape[1]} joints, pipeline expects {self.spec.n_joints}")
        if frames.shape[0] < 2:
            raise PipelineError("a sequence needs at least two frames")
        centered = flatten_frames(center_sequence(frames, self.spec.hip_index))
        return {"pose": centered[1:], "motion": centered[1:] - centered[:-1]}

    def _layer_input(self, name: str, X: np.ndarray) -> np.ndarray:
        layer = self._layer(name)
        if layer.q > 1:
            X = concat_trajectory(X, layer.q)
        if X.shape[1] != self.dims[name]:
            raise PipelineError(f"layer {name}: received dimension {X.shape[1]}, expected {self.dims[name]}")
        return X

    def _layer_output(self, name: str, X: np.ndarray) -> np.ndarray:
        out = self.nets[name].substitute(X)
        pool = self._layer(name).pool
        return pool_groups(out, pool) if pool else out

    def _stream(self, stream: str, X: np.ndarray, upto: int | None = None) -> np.ndarray:
        layers = getattr(self.spec, stream)
        n = len(layers) if upto is None else upto
        for i in range(n):
            name = f"{stream}{i + 1}"
            X = self._layer_output(name, self._layer_input(name, X))
        return X

    def _fuse(self, pose: np.ndarray, motion: np.ndarray) -> np.ndarray:
        m = min(len(pose), len(motion))
        return np.hstack([pose[len(pose) - m:], motion[len(motion) - m:]])

    def integration_input(self, frames) -> np.ndarray:
        base = self._base_features(np.asarray(frames, dtype=np.float64))
        fused = self._fuse(self._stream("pose", base["pose"]), self._stream("motion", base["motion"]))
        return self._layer_input("integration", fused)

    # ------------------------------------------------------------ training
    def train_layerwise(self, sequences: list[Sequence], epochs: int | None = None,
                        resume: bool = False) -> TrainingReport:
        """Train each layer in turn, freezing it before the next one starts.

        With ``resume`` the existing networks keep learning on ``sequences``
        (used for sequential, replay-free training) instead of starting fresh.
        """
        epochs = self.spec.epochs if epochs is None else epochs
        if not sequences:
            raise PipelineError("no training sequences")
        if any(s.label is None for s in sequences):
            raise PipelineError("integration layer needs labeled sequences")
        if not resume:
            self.nets = {}
        self.frozen = {name: False for name in _slot_names(self.spec)}
        report = TrainingReport()
        base = [self._base_features(s.frames) for s in sequences]
        fused_inputs = {}
        for stream in ("pose", "motion"):
            inputs = [b[stream] for b in base]
            for i in range(len(getattr(self.spec, stream))):
                name = f"{stream}{i + 1}"
                inputs = [self._layer_input(name, X) for X in inputs]
                report.epochs[name] = self._train_net(name, inputs, None, epochs, resume)
                inputs = [self._layer_output(name, X) for X in inputs]
            fused_inputs[stream] = inputs
        inputs = [self._layer_input("integration", self._fuse(p, m))
                  for p, m in zip(fused_inputs["pose"], fused_inputs["motion"])]
        report.epochs["integration"] = self._train_net(
            "integration", inputs, [s.label for s in sequences], epochs, resume)
        return report

    def _train_net(self, name, inputs, labels, epochs, resume) -> list[EpochStats]:
        upstream = {k: v for k, v in self.digests().items() if k != name}
        if not (resume and name in self.nets):
            self.nets[name] = self._new_net(name)
        net = self.nets[name]
        stats = []
        for e in range(epochs):
            seed = self.spec.seed * 100003 + e
            if isinstance(net, GammaGWR):
                stats.append(net.train_epoch(inputs, shuffle_seed=seed, labels=labels))
            else:
                X = np.vstack(inputs)
                ys = None if labels is None else [y for y, Xi in zip(labels, inputs) for _ in range(len(Xi))]
                stats.append(net.train_epoch(X, shuffle_seed=seed, labels=ys))
        if stats:
            log.info("%s: %d epochs, %d nodes, qe %.4f", name, epochs, net.node_count, stats[-1].quantization_error)
        self.frozen[name] = True
        after = {k: v for k, v in self.digests().items() if k != name}
        if after != upstream:
            raise PipelineError(f"layer {name}: training modified a frozen layer")
        return stats

    # ----------------------------------------------------------- inference
    def _require_trained(self) -> None:
        if not self.trained or not all(self.frozen.get(n) for n in _slot_names(self.spec)):
            raise PipelineError("pipeline is not trained and frozen")

    def integration_activity(self, frames) -> np.ndarray:
        """Activity of the integration network at every step of ``frames``."""
        self._require_trained()
        X = self.integration_input(frames)
        net = self.nets["integration"]
        if isinstance(net, GammaGWR):
            return np.array(net.trace(X)[1])
        return np.array([np.exp(-net.find_bmus(x)[2]) for x in X])

    def decide(self, frames) -> tuple[Hashable, float]:
        """Label and confidence for one window of frames."""
        self._require_trained()
        X = self.integration_input(frames)
        net = self.nets["integration"]
        return net.predict_label(X if isinstance(net, GammaGWR) else X[-1])

    def classify_sequence(self, seq) -> list[tuple[int, Hashable, float]]:
        """One decision per non-overlapping window of ``window`` frames."""
        frames = seq.frames if isinstance(seq, Sequence) else np.asarray(seq, dtype=np.float64)
        W = self.spec.window
        if len(frames) < W:
            raise PipelineError(f"sequence of {len(frames)} frames is shorter than the window of {W}")
        out = []
        for start in range(0, len(frames) - W + 1, W):
            label, conf = self.decide(frames[start : start + W])
            out.append((start, label, conf))
        return out

    def predict_sequence(self, seq) -> Hashable:
        return majority_vote([label for _, label, _ in self.classify_sequence(seq)])

    # -------------------------------------------------------- serialization
    def to_dict(self) -> dict:
        return {"spec": self.spec.to_dict(),
                "nets": {name: net.to_dict() for name, net in self.nets.items()},
                "frozen": dict(self.frozen)}

    @classmethod
    def from_dict(cls, state: dict) -> "Pipeline":
        pipe = cls(PipelineSpec.from_dict(state["spec"]))
        for name, net_state in state["nets"].items():
            net_cls = GammaGWR if net_state["kind"] == "gamma" else GWR
            pipe.nets[name] = net_cls.from_dict(net_state)
        pipe.frozen = {k: bool(v) for k, v in state["frozen"].items()}
        return pipe


def build(spec: PipelineSpec) -> Pipeline:
    return Pipeline(spec)


def train_layerwise(pipeline: Pipeline, dataset, epochs: int | None = None) -> TrainingReport:
    return pipeline.train_layerwise(list(dataset), epochs)


def classify_sequence(pipeline: Pipeline, seq):
    return pipeline.classify_sequence(seq)


def majority_vote(labels) -> Hashable:
    """Most frequent label; ties go to the smallest label."""
    counts = Counter(labels)
    if not counts:
        raise ValueError("no labels to vote on")
    best = max(counts.values())
    return min(k for k, v in counts.items() if v == best)
