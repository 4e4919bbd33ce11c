"""Growing Neural Gas baseline.

Unlike GWR, GNG grows on a fixed schedule: one node every ``lambda_interval``
steps, placed between the node with the largest accumulated error and its
worst neighbor.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from .graph import GrowingGraph, as_vector, row_distances, two_smallest
from .gwr import EpochStats, StepOutcome


@dataclass(frozen=True)
class GngParams:
    eps_b: float = 0.05
    eps_n: float = 0.006
    max_edge_age: int = 50
    lambda_interval: int = 100
    alpha: float = 0.5
    decay: float = 0.995
    max_nodes: Optional[int] = None

    def __post_init__(self):
        if not 0.0 < self.eps_n < self.eps_b <= 1.0:
            raise ValueError("learning rates must satisfy 0 < eps_n < eps_b <= 1")
        if self.lambda_interval < 1 or self.max_edge_age < 1:
            raise ValueError("lambda_interval and max_edge_age must be >= 1")
        if not (0.0 < self.alpha <= 1.0 and 0.0 < self.decay <= 1.0):
            raise ValueError("alpha and decay must lie in (0, 1]")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict):
        return cls(**d)


class GNG(GrowingGraph):
    kind = "gng"

    def __init__(self, dim: int, params: GngParams | None = None, seed: int = 0, init_samples=None):
        if dim < 1:
            raise ValueError("input dimensionality must be >= 1")
        self.params = params or GngParams()
        self.seed = int(seed)
        self.rng = np.random.default_rng(self.seed)
        if init_samples is not None:
            if len(init_samples) != 2:
                raise ValueError("init_samples must hold exactly two vectors")
            w = np.stack([as_vector(v, dim) for v in init_samples])
        else:
            w = self.rng.uniform(0.0, 1.0, size=(2, dim))
        super().__init__(dim, w)
        self.error = np.zeros(2)
        self.steps = 0

    def _append_extra(self, error: float = 0.0) -> None:
        self.error = np.append(self.error, error)

    def _delete_extra(self, keep: np.ndarray) -> None:
        self.error = self.error[keep]

    def train_step(self, x, step_index: int | None = None, lambda_interval: int | None = None,
                   label=None) -> StepOutcome:
        """One GNG adaptation step; inserts when ``step_index`` is a multiple of the interval.

        ``step_index`` is 1-based and defaults to the network's own step counter.
        """
        p = self.params
        lam = lambda_interval or p.lambda_interval
        x = as_vector(x, self.dim)
        self.steps += 1
        step_index = self.steps if step_index is None else step_index

        d = row_distances(self.weights, x)
        b_row, s_row = two_smallest(d)
        b, s = self.ids[b_row], self.ids[s_row]
        self.error[b_row] += float(d[b_row]) ** 2
        self.weights[b_row] += p.eps_b * (x - self.weights[b_row])
        nb = self.neighbor_rows(b)
        if nb.size:
            self.weights[nb] += p.eps_n * (x - self.weights[nb])
        self.connect(b, s)
        self.age_and_prune(b, p.max_edge_age)
        if label is not None:
            self.add_label(b, label)

        inserted = False
        if step_index > 0 and step_index % lam == 0 and (p.max_nodes is None or len(self.ids) < p.max_nodes):
            self._insert_max_error()
            inserted = True
        self.error *= p.decay
        return StepOutcome(b, math.exp(-float(d[b_row])), inserted, b)

    def _insert_max_error(self) -> int:
        p = self.params
        q_row = int(np.argmax(self.error))
        q = self.ids[q_row]
        if self.neighbors[q]:
            f = max(sorted(self.neighbors[q]), key=lambda n: self.error[self.row(n)])
        else:
            errs = self.error.copy()
            errs[q_row] = -np.inf
            f = self.ids[int(np.argmax(errs))]
        f_row = self.row(f)
        self.error[q_row] *= p.alpha
        self.error[f_row] *= p.alpha
        r = self._add_node((self.weights[q_row] + self.weights[f_row]) / 2.0, error=float(self.error[q_row]))
        self.disconnect(q, f)
        self.connect(r, q)
        self.connect(r, f)
        return r

    def train_epoch(self, data, shuffle_seed: int = 0) -> EpochStats:
        X = np.asarray(data, dtype=np.float64)
        if X.size == 0:
            raise ValueError("cannot train on empty data")
        X = X.reshape(-1, self.dim)
        order = np.random.default_rng(shuffle_seed).permutation(len(X))
        acts, ins = [], 0
        for i in order:
            out = self.train_step(X[i])
            acts.append(out.activity)
            ins += out.inserted
        return EpochStats(float(np.mean(acts)), float("nan"), self.quantization_error(X), len(self.ids), ins)

    def to_dict(self) -> dict:
        state = self._graph_state()
        state.update(kind=self.kind, params=self.params.to_dict(), seed=self.seed,
                     rng_state=self.rng.bit_generator.state, error=self.error.tolist(), steps=self.steps)
        return state

    @classmethod
    def from_dict(cls, state: dict):
        net = cls.__new__(cls)
        net._load_graph_state(state)
        net.params = GngParams.from_dict(state["params"])
        net.seed = int(state["seed"])
        net.rng = np.random.default_rng()
        net.rng.bit_generator.state = state["rng_state"]
        net.error = np.array(state["error"], dtype=np.float64)
        net.steps = int(state["steps"])
        return net


def gng_train_step(net: GNG, x, lambda_interval: int, step_index: int) -> StepOutcome:
    return net.train_step(x, step_index=step_index, lambda_interval=lambda_interval)
