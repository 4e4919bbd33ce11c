"""Gamma-GWR: GWR nodes extended with K temporal context descriptors.

Each node carries a weight ``w`` and contexts ``c_1..c_K``. A global context
``C_1..C_K`` is a leaky trace of the previous BMU:

    C_k(t) = beta * w_b(t-1) + (1 - beta) * c_{b,k-1}(t-1),   c_{b,0} := w_b

and the matching distance is ``alpha_0 |x - w_j| + sum_k alpha_k |C_k - c_{j,k}|``.
With ``K = 0`` and ``alpha_0 = 1`` the dynamics are exactly those of :class:`GWR`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, fields
from typing import Optional, Sequence

import numpy as np

from .graph import Label, as_vector, row_distances, two_smallest
from .gwr import GWR, EpochStats, GwrParams, StepOutcome


def default_alpha(K: int) -> tuple[float, ...]:
    """Linearly decaying weights ``(K+1-k)/sum`` for k = 0..K."""
    raw = [float(K + 1 - k) for k in range(K + 1)]
    total = sum(raw)
    return tuple(r / total for r in raw)


@dataclass(frozen=True)
class GammaParams(GwrParams):
    K: int = 1
    alpha: Optional[tuple] = None
    beta: float = 0.7

    def __post_init__(self):
        super().__post_init__()
        if int(self.K) != self.K or self.K < 0:
            raise ValueError("K must be a non-negative integer")
        if self.alpha is None:
            object.__setattr__(self, "alpha", default_alpha(self.K))
        else:
            object.__setattr__(self, "alpha", tuple(float(a) for a in self.alpha))
        if len(self.alpha) != self.K + 1:
            raise ValueError(f"alpha needs K+1 = {self.K + 1} entries, got {len(self.alpha)}")
        if any(a <= 0 for a in self.alpha):
            raise ValueError("alpha entries must be positive")
        if not 0.0 < self.beta < 1.0:
            raise ValueError("beta must lie in (0, 1)")

    def to_dict(self) -> dict:
        d = {f.name: getattr(self, f.name) for f in fields(self)}
        d["alpha"] = list(self.alpha)
        return d


@dataclass
class GlobalContext:
    """Network-wide context vectors plus the previous BMU's snapshot."""

    C: np.ndarray
    prev_weight: Optional[np.ndarray] = None
    prev_contexts: Optional[np.ndarray] = None

    @classmethod
    def zeros(cls, K: int, dim: int) -> "GlobalContext":
        return cls(np.zeros((K, dim)))

    def copy(self) -> "GlobalContext":
        return GlobalContext(
            self.C.copy(),
            None if self.prev_weight is None else self.prev_weight.copy(),
            None if self.prev_contexts is None else self.prev_contexts.copy(),
        )


def update_global_context(ctx: GlobalContext, beta: float) -> GlobalContext:
    """Recompute ``C_1..C_K`` from the stored BMU snapshot (in place, returned)."""
    K = ctx.C.shape[0]
    if ctx.prev_weight is None or K == 0:
        return ctx
    w = ctx.prev_weight
    lagged = np.vstack([w[None, :], ctx.prev_contexts[: K - 1]])
    ctx.C = beta * w[None, :] + (1.0 - beta) * lagged
    return ctx


def gamma_distance(weight, contexts, x, ctx_C, alpha) -> float:
    """Temporal distance of a single node to the input and global context."""
    weight = np.asarray(weight, dtype=np.float64)
    contexts = np.asarray(contexts, dtype=np.float64).reshape(-1, weight.shape[0])
    ctx_C = np.asarray(ctx_C, dtype=np.float64).reshape(-1, weight.shape[0])
    x = np.asarray(x, dtype=np.float64)
    if x.shape != weight.shape:
        raise ValueError("input and weight dimensionality differ")
    if len(alpha) != contexts.shape[0] + 1 or ctx_C.shape != contexts.shape:
        raise ValueError("alpha must have K+1 entries and contexts must match the global context")
    d = alpha[0] * float(np.linalg.norm(x - weight))
    for k in range(contexts.shape[0]):
        d += alpha[k + 1] * float(np.linalg.norm(ctx_C[k] - contexts[k]))
    return d


class GammaGWR(GWR):
    kind = "gamma"

    def __init__(self, dim: int, params: GammaParams | None = None, seed: int = 0,
                 init_samples: Sequence | None = None):
        params = params or GammaParams()
        super().__init__(dim, params, seed, init_samples)
        self.K = params.K
        self._alpha = np.array(params.alpha)
        self.contexts = np.zeros((2, self.K, dim))
        self.context = GlobalContext.zeros(self.K, dim)

    def _append_extra(self, contexts: np.ndarray | None = None) -> None:
        super()._append_extra()
        self.contexts = np.concatenate([self.contexts, contexts[None]], axis=0)

    def _delete_extra(self, keep: np.ndarray) -> None:
        super()._delete_extra(keep)
        self.contexts = self.contexts[keep]

    # ------------------------------------------------------------ distance
    def _distances_with(self, x: np.ndarray, C: np.ndarray) -> np.ndarray:
        d = self._alpha[0] * row_distances(self.weights, x)
        if self.K:
            diff = C[None, :, :] - self.contexts
            d = d + np.sqrt(np.einsum("jkn,jkn->jk", diff, diff)) @ self._alpha[1:]
        return d

    def _distances(self, x: np.ndarray) -> np.ndarray:
        return self._distances_with(x, self.context.C)

    # ------------------------------------------------------------ training
    def reset_context(self) -> None:
        """Zero the global context; call at every sequence boundary."""
        self.context = GlobalContext.zeros(self.K, self.dim)

    def _insert(self, b_row: int, x: np.ndarray) -> int:
        ctx = (self.context.C + self.contexts[b_row]) / 2.0
        return self._add_node((self.weights[b_row] + x) / 2.0, contexts=ctx)

    def _adapt(self, b_row: int, nb: np.ndarray, x: np.ndarray) -> None:
        p = self.params
        C = self.context.C
        rate_b = p.eps_b * self.habituation[b_row]
        if self.K:
            self.contexts[b_row] += rate_b * (C - self.contexts[b_row])
            if nb.size:
                rate = (p.eps_n * self.habituation[nb])[:, None, None]
                self.contexts[nb] += rate * (C[None] - self.contexts[nb])
        super()._adapt(b_row, nb, x)

    def train_step(self, x, label: Label | None = None) -> StepOutcome:
        x = as_vector(x, self.dim)
        update_global_context(self.context, self.params.beta)
        out = self._step(x, self._distances(x), label)
        b_row = self.row(out.bmu_id)
        self.context.prev_weight = self.weights[b_row].copy()
        self.context.prev_contexts = self.contexts[b_row].copy()
        return out

    def train_sequence(self, seq, label: Label | None = None) -> list[StepOutcome]:
        X = np.asarray(seq, dtype=np.float64).reshape(-1, self.dim)
        self.reset_context()
        return [self.train_step(x, label) for x in X]

    def train_epoch(self, sequences, shuffle_seed: int = 0,
                    labels: Sequence[Label | None] | None = None) -> EpochStats:
        """One pass over whole sequences in shuffled order; frames stay in order.

        The quantization error is the mean weight distance of each frame to
        its temporal BMU, replayed on the post-epoch network.
        """
        seqs = [np.asarray(s, dtype=np.float64).reshape(-1, self.dim) for s in sequences]
        if not seqs or not sum(len(s) for s in seqs):
            raise ValueError("cannot train on empty data")
        ys = list(labels) if labels is not None else [None] * len(seqs)
        if len(ys) != len(seqs):
            raise ValueError("labels and sequences differ in length")
        order = np.random.default_rng(shuffle_seed).permutation(len(seqs))
        acts, habs, ins = [], [], 0
        for i in order:
            for out in self.train_sequence(seqs[i], ys[i]):
                acts.append(out.activity)
                habs.append(out.bmu_habituation)
                ins += out.inserted
        return EpochStats(float(np.mean(acts)), float(np.mean(habs)),
                          self.temporal_quantization_error(seqs), len(self.ids), ins)

    # ----------------------------------------------------------- inference
    def trace(self, seq) -> tuple[list[int], list[float], GlobalContext]:
        """BMU ids and activities for ``seq`` from a fresh context, read-only."""
        X = np.asarray(seq, dtype=np.float64).reshape(-1, self.dim)
        ctx = GlobalContext.zeros(self.K, self.dim)
        ids, acts = [], []
        for x in X:
            update_global_context(ctx, self.params.beta)
            d = self._distances_with(x, ctx.C)
            b_row = int(np.argmin(d))
            ids.append(self.ids[b_row])
            acts.append(math.exp(-float(d[b_row])))
            ctx.prev_weight = self.weights[b_row]
            ctx.prev_contexts = self.contexts[b_row]
        return ids, acts, ctx

    def temporal_quantization_error(self, sequences) -> float:
        total, n = 0.0, 0
        for s in sequences:
            X = np.asarray(s, dtype=np.float64).reshape(-1, self.dim)
            ids, _, _ = self.trace(X)
            rows = [self.row(i) for i in ids]
            total += float(np.sum(np.linalg.norm(X - self.weights[rows], axis=1)))
            n += len(X)
        return total / n

    def substitute(self, vectors) -> np.ndarray:
        ids, _, _ = self.trace(vectors)
        return self.weights[[self.row(i) for i in ids]].copy()

    def predict_label(self, window) -> tuple[Label, float]:
        """Label of the final BMU after running ``window`` through the context dynamics.

        If that node has never seen a label, the nearest labeled node under
        the same final context answers instead.
        """
        X = np.asarray(window, dtype=np.float64).reshape(-1, self.dim)
        if len(X) == 0:
            raise ValueError("empty window")
        if not self.is_labeled():
            raise ValueError("network carries no labels")
        # replay all but the last frame, then match the last one explicitly
        _, _, ctx = self.trace(X[:-1])
        update_global_context(ctx, self.params.beta)
        d = self._distances_with(X[-1], ctx.C)
        return self.node_label(self._nearest_labeled(d))

    def context_descriptor(self, node_id: int, k: int = 1) -> np.ndarray:
        return self.contexts[self.row(node_id), k - 1].copy()

    # -------------------------------------------------------- serialization
    def to_dict(self) -> dict:
        state = super().to_dict()
        state["contexts"] = self.contexts.tolist()
        state["global_context"] = {
            "C": self.context.C.tolist(),
            "prev_weight": None if self.context.prev_weight is None else self.context.prev_weight.tolist(),
            "prev_contexts": None if self.context.prev_contexts is None else self.context.prev_contexts.tolist(),
        }
        return state

    @classmethod
    def from_dict(cls, state: dict):
        net = super().from_dict(state)
        net.K = net.params.K
        net._alpha = np.array(net.params.alpha)
        net.contexts = np.array(state["contexts"], dtype=np.float64).reshape(len(net.ids), net.K, net.dim)
        g = state["global_context"]
        net.context = GlobalContext(
            np.array(g["C"], dtype=np.float64).reshape(net.K, net.dim),
            None if g["prev_weight"] is None else np.array(g["prev_weight"], dtype=np.float64),
            None if g["prev_contexts"] is None
            else np.array(g["prev_contexts"], dtype=np.float64).reshape(net.K, net.dim),
        )
        return net

    @staticmethod
    def _params_cls():
        return GammaParams
