"""Grow When Required network on static inputs."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields
from typing import Optional, Sequence

import numpy as np

from .graph import GrowingGraph, Label, as_vector, row_distances, two_smallest

#: Lower clamp of the habituation counter. The habituation rule itself
#: settles at 1 - 1/1.05 before ever reaching it.
H_MIN = 0.0
HABITUATION_FIXED_POINT = 1.0 - 1.0 / 1.05


@dataclass(frozen=True)
class GwrParams:
    activation_threshold: float = 0.9
    habituation_threshold: float = 0.3
    tau_b: float = 0.3
    tau_n: float = 0.1
    eps_b: float = 0.1
    eps_n: float = 0.01
    max_edge_age: int = 50
    max_nodes: Optional[int] = None

    def __post_init__(self):
        # activation_threshold == 0 is accepted and means "never insert"
        if not 0.0 <= self.activation_threshold < 1.0:
            raise ValueError(f"activation_threshold must be in [0, 1), got {self.activation_threshold}")
        if not 0.0 < self.habituation_threshold < 1.0:
            raise ValueError(f"habituation_threshold must be in (0, 1), got {self.habituation_threshold}")
        if not self.tau_b > self.tau_n > 0.0:
            raise ValueError("habituation rates must satisfy tau_b > tau_n > 0")
        if not 0.0 < self.eps_n < self.eps_b <= 1.0:
            raise ValueError("learning rates must satisfy 0 < eps_n < eps_b <= 1")
        if int(self.max_edge_age) != self.max_edge_age or self.max_edge_age < 1:
            raise ValueError("max_edge_age must be an integer >= 1")
        if self.max_nodes is not None and self.max_nodes < 2:
            raise ValueError("max_nodes must be >= 2 or None")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict):
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown parameter(s): {', '.join(sorted(unknown))}")
        return cls(**d)


@dataclass
class StepOutcome:
    bmu_id: int
    activity: float
    inserted: bool
    winner_id: int
    bmu_habituation: float = 1.0


@dataclass
class EpochStats:
    mean_activity: float
    mean_habituation_of_bmus: float
    quantization_error: float
    node_count: int
    insertions: int = 0


def activity(d_b: float) -> float:
    """Network activity ``exp(-d_b)`` for a non-negative BMU distance."""
    if d_b < 0:
        raise ValueError("distance must be non-negative")
    return math.exp(-d_b)


def _habituate(h, tau):
    return np.clip(h + tau * 1.05 * (1.0 - h) - tau, H_MIN, 1.0)


def habituate(h: float, tau: float) -> float:
    """One application of the habituation rule, clamped to [H_MIN, 1]."""
    if tau <= 0:
        raise ValueError("tau must be positive")
    if not 0.0 <= h <= 1.0:
        raise ValueError("habituation must lie in [0, 1]")
    return float(_habituate(h, tau))


class GWR(GrowingGraph):
    """Grow When Required network.

    Starts with two nodes and inserts a new node halfway between the BMU and
    the input when the activity drops below ``activation_threshold`` while the
    BMU is already habituated below ``habituation_threshold``.
    """

    kind = "gwr"

    def __init__(self, dim: int, params: GwrParams | None = None, seed: int = 0,
                 init_samples: Sequence | None = None):
        if dim < 1:
            raise ValueError("input dimensionality must be >= 1")
        self.params = params or GwrParams()
        self.seed = int(seed)
        self.rng = np.random.default_rng(self.seed)
        if init_samples is not None:
            if len(init_samples) != 2:
                raise ValueError("init_samples must hold exactly two vectors")
            w = np.stack([as_vector(v, dim) for v in init_samples])
        else:
            w = self.rng.uniform(0.0, 1.0, size=(2, dim))
        super().__init__(dim, w)
        self.habituation = np.ones(2)

    def _append_extra(self, **extra) -> None:
        self.habituation = np.append(self.habituation, 1.0)

    def _delete_extra(self, keep: np.ndarray) -> None:
        self.habituation = self.habituation[keep]

    # ------------------------------------------------------------ training
    def _distances(self, x: np.ndarray) -> np.ndarray:
        return row_distances(self.weights, x)

    def _can_grow(self) -> bool:
        p = self.params
        return p.max_nodes is None or len(self.ids) < p.max_nodes

    def _insert(self, b_row: int, x: np.ndarray) -> int:
        return self._add_node((self.weights[b_row] + x) / 2.0)

    def _adapt(self, b_row: int, nb: np.ndarray, x: np.ndarray) -> None:
        p = self.params
        self.weights[b_row] += p.eps_b * self.habituation[b_row] * (x - self.weights[b_row])
        if nb.size:
            rate = (p.eps_n * self.habituation[nb])[:, None]
            self.weights[nb] += rate * (x - self.weights[nb])

    def _step(self, x: np.ndarray, d: np.ndarray, label: Label | None) -> StepOutcome:
        p = self.params
        b_row, s_row = two_smallest(d)
        b, s = self.ids[b_row], self.ids[s_row]
        a = math.exp(-float(d[b_row]))
        h_b = float(self.habituation[b_row])
        self.connect(b, s)
        inserted = a < p.activation_threshold and h_b < p.habituation_threshold and self._can_grow()
        if inserted:
            winner = self._insert(b_row, x)
            self.connect(winner, b)
            self.connect(winner, s)
            self.disconnect(b, s)
        else:
            winner = b
            nb = self.neighbor_rows(b)
            self._adapt(b_row, nb, x)
            self.habituation[b_row] = _habituate(self.habituation[b_row], p.tau_b)
            if nb.size:
                self.habituation[nb] = _habituate(self.habituation[nb], p.tau_n)
        self.age_and_prune(b, p.max_edge_age)
        if label is not None:
            self.add_label(winner, label)
        return StepOutcome(b, a, inserted, winner, h_b)

    def train_step(self, x, label: Label | None = None) -> StepOutcome:
        x = as_vector(x, self.dim)
        return self._step(x, self._distances(x), label)

    def train_epoch(self, data, shuffle_seed: int = 0,
                    labels: Sequence[Label | None] | None = None) -> EpochStats:
        """One shuffled pass over ``data`` (an ``(m, dim)`` array-like).

        The quantization error is measured against the network as it stands
        after the pass.
        """
        X = np.asarray(data, dtype=np.float64)
        if X.size == 0:
            raise ValueError("cannot train on empty data")
        X = X.reshape(-1, self.dim)
        ys = list(labels) if labels is not None else [None] * len(X)
        if len(ys) != len(X):
            raise ValueError("labels and data differ in length")
        order = np.random.default_rng(shuffle_seed).permutation(len(X))
        acts, habs, ins = [], [], 0
        for i in order:
            out = self.train_step(X[i], ys[i])
            acts.append(out.activity)
            habs.append(out.bmu_habituation)
            ins += out.inserted
        return EpochStats(float(np.mean(acts)), float(np.mean(habs)),
                          self.quantization_error(X), len(self.ids), ins)

    # ----------------------------------------------------------- inference
    def predict_label(self, x) -> tuple[Label, float]:
        """Majority label of the BMU, falling back to the nearest labeled node."""
        if not self.is_labeled():
            raise ValueError("network carries no labels")
        x = as_vector(x, self.dim)
        return self.node_label(self._nearest_labeled(self._distances(x)))

    def _nearest_labeled(self, d: np.ndarray) -> int:
        labeled = np.array([bool(c) for c in self.label_counts])
        return self.ids[int(np.argmin(np.where(labeled, d, np.inf)))]

    def substitute(self, vectors) -> np.ndarray:
        """Replace every vector by the weight of its BMU."""
        X = np.asarray(vectors, dtype=np.float64).reshape(-1, self.dim)
        rows = [int(np.argmin(self._distances(x))) for x in X]
        return self.weights[rows].copy()

    # -------------------------------------------------------- serialization
    def to_dict(self) -> dict:
        state = self._graph_state()
        state.update(kind=self.kind, params=self.params.to_dict(), seed=self.seed,
                     rng_state=self.rng.bit_generator.state,
                     habituation=self.habituation.tolist())
        return state

    @classmethod
    def from_dict(cls, state: dict):
        net = cls.__new__(cls)
        net._load_graph_state(state)
        net.params = cls._params_cls().from_dict(state["params"])
        net.seed = int(state["seed"])
        net.rng = np.random.default_rng()
        net.rng.bit_generator.state = state["rng_state"]
        net.habituation = np.array(state["habituation"], dtype=np.float64)
        return net

    @staticmethod
    def _params_cls():
        return GwrParams
