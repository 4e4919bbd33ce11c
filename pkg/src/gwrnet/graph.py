"""Node and edge bookkeeping shared by the growing networks.

Nodes are stored row-wise in numpy arrays, always sorted by ascending node
id (ids are never reused and new nodes are appended), so ``np.argmin`` over
rows breaks distance ties in favour of the lowest id.
"""
from __future__ import annotations

from collections import Counter
from typing import Hashable, Iterable

import numpy as np

Label = Hashable


def as_vector(x, dim: int) -> np.ndarray:
    v = np.asarray(x, dtype=np.float64)
    if v.ndim != 1 or v.shape[0] != dim:
        raise ValueError(f"expected a vector of length {dim}, got shape {v.shape}")
    return v


def row_distances(weights: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Euclidean distance from ``x`` to every row of ``weights``."""
    diff = weights - x
    return np.sqrt(np.einsum("ij,ij->i", diff, diff))


def two_smallest(d: np.ndarray) -> tuple[int, int]:
    """Rows of the smallest and second smallest entry, first occurrence wins."""
    b = int(np.argmin(d))
    masked = d.copy()
    masked[b] = np.inf
    return b, int(np.argmin(masked))


class GrowingGraph:
    """Weights, label counts and an undirected aged edge set.

    Subclasses own any additional per-node arrays and keep them aligned by
    overriding :meth:`_append_extra` and :meth:`_delete_extra`.
    """

    kind = "graph"

    def __init__(self, dim: int, weights: np.ndarray):
        if dim < 1:
            raise ValueError("input dimensionality must be >= 1")
        self.dim = int(dim)
        self.weights = np.array(weights, dtype=np.float64).reshape(-1, self.dim)
        n = self.weights.shape[0]
        self.ids: list[int] = list(range(n))
        self.next_id = n
        self.label_counts: list[Counter] = [Counter() for _ in range(n)]
        self.edges: dict[tuple[int, int], int] = {}
        self.neighbors: dict[int, set[int]] = {i: set() for i in self.ids}
        self._rows = {i: r for r, i in enumerate(self.ids)}

    # ----------------------------------------------------------------- nodes
    def __len__(self) -> int:
        return len(self.ids)

    @property
    def node_count(self) -> int:
        return len(self.ids)

    def row(self, node_id: int) -> int:
        return self._rows[node_id]

    def weight(self, node_id: int) -> np.ndarray:
        return self.weights[self._rows[node_id]].copy()

    def _add_node(self, weight: np.ndarray, **extra) -> int:
        nid = self.next_id
        self.next_id += 1
        self.weights = np.vstack([self.weights, weight[None, :]])
        self.ids.append(nid)
        self._rows[nid] = len(self.ids) - 1
        self.label_counts.append(Counter())
        self.neighbors[nid] = set()
        self._append_extra(**extra)
        return nid

    def _remove_nodes(self, node_ids: Iterable[int]) -> None:
        doomed = sorted(set(node_ids))
        if not doomed:
            return
        for nid in doomed:
            for other in list(self.neighbors[nid]):
                self.disconnect(nid, other)
            del self.neighbors[nid]
        rows = [self._rows[nid] for nid in doomed]
        keep = np.ones(len(self.ids), dtype=bool)
        keep[rows] = False
        self.weights = self.weights[keep]
        self.label_counts = [c for c, k in zip(self.label_counts, keep) if k]
        self.ids = [i for i, k in zip(self.ids, keep) if k]
        self._rows = {i: r for r, i in enumerate(self.ids)}
        self._delete_extra(keep)

    def _append_extra(self, **extra) -> None:
        pass

    def _delete_extra(self, keep: np.ndarray) -> None:
        pass

    # ----------------------------------------------------------------- edges
    @staticmethod
    def _key(a: int, b: int) -> tuple[int, int]:
        return (a, b) if a < b else (b, a)

    def connect(self, a: int, b: int) -> None:
        """Create the edge ``a``-``b`` or reset its age to 0."""
        if a == b:
            raise ValueError("self-edges are not allowed")
        self.edges[self._key(a, b)] = 0
        self.neighbors[a].add(b)
        self.neighbors[b].add(a)

    def disconnect(self, a: int, b: int) -> None:
        if self.edges.pop(self._key(a, b), None) is not None:
            self.neighbors[a].discard(b)
            self.neighbors[b].discard(a)

    def age_and_prune(self, node_id: int, max_age: int) -> None:
        """Age the edges of ``node_id``, drop stale edges and isolated nodes.

        Isolated nodes are removed in ascending id order but never below two
        nodes, so the best-matching search always has a runner-up.
        """
        touched = []
        for other in list(self.neighbors[node_id]):
            key = self._key(node_id, other)
            age = self.edges[key] + 1
            if age > max_age:
                self.disconnect(node_id, other)
                touched.append(other)
            else:
                self.edges[key] = age
        if not touched:
            return
        touched.append(node_id)
        isolated = sorted(n for n in set(touched) if not self.neighbors[n])
        room = len(self.ids) - 2
        self._remove_nodes(isolated[: max(room, 0)])

    def neighbor_rows(self, node_id: int) -> np.ndarray:
        return np.array(sorted(self._rows[n] for n in self.neighbors[node_id]), dtype=np.intp)

    # ------------------------------------------------------------- matching
    def find_bmus(self, x) -> tuple[int, int, float, float]:
        """Best and second-best matching node ids with their distances."""
        x = as_vector(x, self.dim)
        d = row_distances(self.weights, x)
        b, s = two_smallest(d)
        return self.ids[b], self.ids[s], float(d[b]), float(d[s])

    def bmu(self, x) -> int:
        x = as_vector(x, self.dim)
        return self.ids[int(np.argmin(row_distances(self.weights, x)))]

    def quantization_error(self, data) -> float:
        """Mean distance between each sample and the weight of its BMU."""
        X = np.asarray(data, dtype=np.float64).reshape(-1, self.dim)
        if X.shape[0] == 0:
            raise ValueError("quantization error of an empty dataset")
        total = 0.0
        for x in X:
            total += float(np.min(row_distances(self.weights, x)))
        return total / X.shape[0]

    # --------------------------------------------------------------- labels
    def add_label(self, node_id: int, label: Label) -> None:
        self.label_counts[self._rows[node_id]][label] += 1

    def is_labeled(self) -> bool:
        return any(self.label_counts)

    def label_totals(self) -> Counter:
        total: Counter = Counter()
        for c in self.label_counts:
            total.update(c)
        return total

    def node_label(self, node_id: int) -> tuple[Label, float]:
        """Majority label of a node and its count fraction.

        Ties go to the smallest label.
        """
        counts = self.label_counts[self._rows[node_id]]
        if not counts:
            raise ValueError(f"node {node_id} has no label counts")
        best = max(counts.values())
        label = min(k for k, v in counts.items() if v == best)
        return label, best / sum(counts.values())

    # -------------------------------------------------------- serialization
    def _graph_state(self) -> dict:
        return {
            "dim": self.dim,
            "ids": list(self.ids),
            "next_id": self.next_id,
            "weights": self.weights.tolist(),
            "label_counts": [sorted(c.items(), key=lambda kv: repr(kv[0])) for c in self.label_counts],
            "edges": [[a, b, age] for (a, b), age in sorted(self.edges.items())],
        }

    def _load_graph_state(self, state: dict) -> None:
        self.dim = int(state["dim"])
        self.ids = [int(i) for i in state["ids"]]
        self.next_id = int(state["next_id"])
        self.weights = np.array(state["weights"], dtype=np.float64).reshape(-1, self.dim)
        self.label_counts = [Counter({k: int(v) for k, v in pairs}) for pairs in state["label_counts"]]
        self._rows = {i: r for r, i in enumerate(self.ids)}
        self.edges = {}
        self.neighbors = {i: set() for i in self.ids}
        for a, b, age in state["edges"]:
            self.connect(int(a), int(b))
            self.edges[self._key(int(a), int(b))] = int(age)
