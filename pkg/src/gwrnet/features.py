"""Skeleton-frame preprocessing.

Frames are ``(J, 3)`` arrays of joint coordinates. Flattening is joint-major
with ``(x, y, z)`` inside each joint, so joint ``j`` occupies entries
``3j .. 3j+2`` of a flat vector.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Hashable, Optional

import numpy as np


@dataclass
class Sequence:
    frames: np.ndarray  # (T, J, 3)
    label: Optional[Hashable] = None
    subject: Optional[Hashable] = None
    seq_id: Optional[Hashable] = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.frames = np.asarray(self.frames, dtype=np.float64)
        if self.frames.ndim != 3 or self.frames.shape[2] != 3:
            raise ValueError(f"frames must have shape (T, J, 3), got {self.frames.shape}")
        if not np.all(np.isfinite(self.frames)):
            raise ValueError("sequence contains missing (non-finite) joint values")

    def __len__(self) -> int:
        return self.frames.shape[0]

    @property
    def n_joints(self) -> int:
        return self.frames.shape[1]


def _check_frame(frame) -> np.ndarray:
    f = np.asarray(frame, dtype=np.float64)
    if f.ndim != 2 or f.shape[1] != 3:
        raise ValueError(f"a frame must have shape (J, 3), got {f.shape}")
    if not np.all(np.isfinite(f)):
        raise ValueError("frame contains missing (non-finite) joint values")
    return f


def center_on_hips(frame, hip_joint_index: int) -> np.ndarray:
    """Express every joint relative to the hip joint."""
    f = _check_frame(frame)
    if not 0 <= hip_joint_index < f.shape[0]:
        raise IndexError(f"hip joint index {hip_joint_index} out of range for {f.shape[0]} joints")
    return f - f[hip_joint_index]


def center_sequence(frames, hip_joint_index: int) -> np.ndarray:
    F = np.asarray(frames, dtype=np.float64)
    if F.ndim != 3 or F.shape[2] != 3:
        raise ValueError(f"frames must have shape (T, J, 3), got {F.shape}")
    if not np.all(np.isfinite(F)):
        raise ValueError("sequence contains missing (non-finite) joint values")
    if not 0 <= hip_joint_index < F.shape[1]:
        raise IndexError(f"hip joint index {hip_joint_index} out of range for {F.shape[1]} joints")
    return F - F[:, hip_joint_index : hip_joint_index + 1, :]


def flatten_frames(frames) -> np.ndarray:
    F = np.asarray(frames, dtype=np.float64)
    return F.reshape(F.shape[0], -1)


def motion_diff(seq) -> np.ndarray:
    """Consecutive differences of flattened frames, one per pose transition."""
    frames = seq.frames if isinstance(seq, Sequence) else np.asarray(seq, dtype=np.float64)
    if frames.shape[0] < 2:
        raise ValueError("motion needs at least two frames")
    flat = frames.reshape(frames.shape[0], -1)
    return flat[1:] - flat[:-1]


def concat_trajectory(vectors, q: int) -> np.ndarray:
    """Stride-1 windows of ``q`` consecutive vectors, oldest first, concatenated."""
    V = np.asarray(vectors, dtype=np.float64)
    if q < 1:
        raise ValueError("window q must be >= 1")
    if V.ndim != 2 or V.shape[0] < q:
        raise ValueError(f"need at least q={q} vectors, got {V.shape[0] if V.ndim else 0}")
    m = V.shape[0] - q + 1
    return np.hstack([V[i : i + m] for i in range(q)])


def bmu_substitute(layer_net, vectors) -> np.ndarray:
    """Replace each vector by its BMU weight in ``layer_net``.

    Gamma networks process the vectors in order from a fresh context.
    """
    if layer_net is None or layer_net.node_count < 1:
        raise ValueError("layer network is not trained")
    return layer_net.substitute(vectors)


def max_pool(weight_vector) -> float:
    w = np.asarray(weight_vector, dtype=np.float64).ravel()
    if w.size == 0:
        raise ValueError("cannot pool an empty vector")
    return float(np.max(w))


def pool_groups(vectors, group_size: int) -> np.ndarray:
    """MAX-pool each consecutive block of ``group_size`` entries.

    Applied to a batch of ``(T, m)`` vectors, returns ``(T, m // group_size)``.
    With the joint-major layout and ``group_size=3`` this keeps one value per
    joint.
    """
    V = np.asarray(vectors, dtype=np.float64)
    single = V.ndim == 1
    V = np.atleast_2d(V)
    if group_size < 1 or V.shape[1] % group_size:
        raise ValueError(f"dimension {V.shape[1]} is not divisible into groups of {group_size}")
    out = V.reshape(V.shape[0], -1, group_size).max(axis=2)
    return out[0] if single else out


def joint_groups(dim: int, n_joints: int) -> list[np.ndarray]:
    """Flat-vector indices belonging to each joint.

    ``dim`` may cover several stacked blocks of ``3 * n_joints`` entries (pose
    followed by motion, say); joint ``j`` then owns its coordinates in every block.
    """
    block = 3 * n_joints
    if dim % block:
        raise ValueError(f"dimension {dim} is not a multiple of 3 * {n_joints}")
    blocks = dim // block
    return [np.concatenate([np.arange(b * block + 3 * j, b * block + 3 * j + 3) for b in range(blocks)])
            for j in range(n_joints)]


def pose_motion_features(seq, hip_joint_index: int, motion: bool = True) -> np.ndarray:
    """Hip-centered pose with the motion block appended, aligned on transitions.

    Returns ``(T-1, 6J)`` (or ``(T-1, 3J)`` without motion): row ``t`` holds
    the pose of frame ``t+1`` and the motion from frame ``t`` to ``t+1``.
    """
    frames = seq.frames if isinstance(seq, Sequence) else np.asarray(seq, dtype=np.float64)
    centered = flatten_frames(center_sequence(frames, hip_joint_index))
    if not motion:
        return centered[1:]
    return np.hstack([centered[1:], centered[1:] - centered[:-1]])
