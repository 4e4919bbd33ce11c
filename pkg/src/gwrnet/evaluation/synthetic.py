"""Synthetic skeleton sequences with class-specific sinusoidal joint motion."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence as Seq

import numpy as np

from ..features import Sequence

JOINT_NAMES = (
    "hip_center", "spine", "neck", "head",
    "l_shoulder", "l_elbow", "l_wrist",
    "r_shoulder", "r_elbow", "r_wrist",
    "l_knee", "r_knee", "l_ankle",
)
HIP_INDEX = 0

# Standing pose in meters, x to the subject's left, y up, z towards the sensor.
TEMPLATE = np.array([
    [0.00, 1.00, 0.0], [0.00, 1.25, 0.0], [0.00, 1.50, 0.0], [0.00, 1.68, 0.0],
    [0.18, 1.45, 0.0], [0.22, 1.18, 0.0], [0.24, 0.93, 0.0],
    [-0.18, 1.45, 0.0], [-0.22, 1.18, 0.0], [-0.24, 0.93, 0.0],
    [0.10, 0.55, 0.0], [-0.10, 0.55, 0.0], [0.10, 0.10, 0.0],
])

# Joints whose motion defines the class signatures (arms and legs, not the hip).
MOVABLE = (3, 5, 6, 8, 9, 10, 11, 12)


@dataclass
class SyntheticSpec:
    classes: int = 3
    joints: int = 13
    frames: int = 60
    fps: float = 30.0
    subjects: int = 5
    sequences_per_subject: int = 2
    frequencies: Optional[Seq[float]] = None
    amplitude: float = 0.15
    noise_sigma: float = 0.005
    subject_variation: float = 0.05
    shared_joints: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.classes < 1 or self.frames < 2 or self.subjects < 1 or self.sequences_per_subject < 1:
            raise ValueError("classes, subjects and sequences_per_subject must be >= 1 and frames >= 2")
        if self.joints != len(TEMPLATE):
            raise ValueError(f"the synthetic skeleton has {len(TEMPLATE)} joints")
        if self.noise_sigma < 0 or self.amplitude <= 0 or self.fps <= 0:
            raise ValueError("noise_sigma must be >= 0, amplitude and fps > 0")
        if self.frequencies is not None:
            if len(self.frequencies) != self.classes or len(set(self.frequencies)) != self.classes:
                raise ValueError("need one distinct frequency per class")


@dataclass
class ClassSignature:
    frequency: float
    amplitudes: np.ndarray  # (J, 3)
    phases: np.ndarray      # (J, 3)


def class_signatures(spec: SyntheticSpec) -> list[ClassSignature]:
    """Per-class motion signatures drawn from the spec seed.

    Classes differ in frequency and phase, and unless ``shared_joints`` is
    set, also in which joints move.
    """
    rng = np.random.default_rng([spec.seed, 1])
    freqs = spec.frequencies or [0.5 * (c + 1) for c in range(spec.classes)]
    shared = rng.choice(MOVABLE, size=4, replace=False)
    sigs = []
    for c in range(spec.classes):
        amps = np.zeros((spec.joints, 3))
        moving = shared if spec.shared_joints else rng.choice(MOVABLE, size=4, replace=False)
        amps[moving, 0] = spec.amplitude * rng.uniform(0.5, 1.0, size=4)
        amps[moving, 1] = spec.amplitude * rng.uniform(0.5, 1.0, size=4)
        phases = rng.uniform(0, 2 * np.pi, size=(spec.joints, 3))
        sigs.append(ClassSignature(float(freqs[c]), amps, phases))
    return sigs


def render(sig: ClassSignature, n_frames: int, fps: float, body_scale: float = 1.0,
           amp_scale: float = 1.0, start_phase: float = 0.0, offset=(0.0, 0.0, 0.0),
           noise: float = 0.0, rng: np.random.Generator | None = None) -> np.ndarray:
    """Frames ``(T, J, 3)`` of one performance of a motion signature."""
    t = np.arange(n_frames)[:, None, None] / fps
    motion = amp_scale * sig.amplitudes * np.sin(2 * np.pi * sig.frequency * t + sig.phases + start_phase)
    frames = body_scale * TEMPLATE[None] + motion + np.asarray(offset)[None, None, :]
    if noise > 0:
        rng = rng or np.random.default_rng(0)
        frames = frames + rng.normal(0.0, noise, size=frames.shape)
    return frames


def gen_synthetic(spec: SyntheticSpec) -> list[Sequence]:
    """Labeled sequences for every (subject, class, repetition), deterministic under ``spec.seed``."""
    sigs = class_signatures(spec)
    rng = np.random.default_rng([spec.seed, 2])
    out = []
    for subj in range(spec.subjects):
        body = 1.0 + spec.subject_variation * rng.uniform(-1, 1)
        amp = 1.0 + spec.subject_variation * rng.uniform(-1, 1)
        for c, sig in enumerate(sigs):
            for r in range(spec.sequences_per_subject):
                offset = (rng.uniform(-1, 1), 0.0, rng.uniform(1.5, 3.0))
                frames = render(sig, spec.frames, spec.fps, body, amp,
                                start_phase=rng.uniform(0, 2 * np.pi), offset=offset,
                                noise=spec.noise_sigma, rng=rng)
                out.append(Sequence(frames, label=c, subject=subj, seq_id=f"s{subj}_c{c}_r{r}"))
    return out


# --------------------------------------------------------------------------
# Exercise routine with injectable faults (for assessment)
# --------------------------------------------------------------------------

# joint -> (x amplitude, y lift) of the arm-raising routine
_ROUTINE = {5: (0.10, 0.25), 6: (0.15, 0.40), 8: (0.10, 0.25), 9: (0.15, 0.40), 10: (0.05, 0.10)}


def exercise_routine(n_frames: int = 300, period: float = 60.0, noise: float = 0.003,
                     rng: np.random.Generator | None = None) -> np.ndarray:
    """A periodic two-arm raise with a slight knee bend, ``(T, 13, 3)``."""
    t = np.arange(n_frames) / period
    frames = np.repeat(TEMPLATE[None], n_frames, axis=0)
    for j, (ax, ay) in _ROUTINE.items():
        frames[:, j, 0] += ax * np.sin(2 * np.pi * t)
        frames[:, j, 1] += ay * (1 - np.cos(2 * np.pi * t))
    if noise > 0:
        rng = rng or np.random.default_rng(0)
        frames = frames + rng.normal(0.0, noise, size=frames.shape)
    return frames


def inject_fault(frames, joint: int, start: int, length: int, offset: float = 1.0, axis: int = 2) -> np.ndarray:
    """Copy of ``frames`` with ``joint`` displaced by ``offset`` along ``axis`` for ``length`` frames."""
    out = np.array(frames, dtype=np.float64)
    if not 0 <= start < len(out) or length < 1:
        raise ValueError("fault window outside the sequence")
    out[start : start + length, joint, axis] += offset
    return out


def gen_exercise_corpus(n_correct: int = 20, n_incorrect: int = 20, n_frames: int = 300,
                        fault_length: int = 150, seed: int = 0) -> list[Sequence]:
    """Correct and faulty executions of the routine by one performer.

    Faulty sequences carry ``meta["fault"] = (joint, start, length)``; labels
    are ``"correct"`` and ``"incorrect"``.
    """
    rng = np.random.default_rng([seed, 3])
    out = []
    for i in range(n_correct + n_incorrect):
        frames = exercise_routine(n_frames, rng=rng)
        if i < n_correct:
            out.append(Sequence(frames, label="correct", subject=0, seq_id=f"ok{i}"))
            continue
        joint = int(rng.choice(MOVABLE))
        start = int(rng.integers(1, n_frames - fault_length))
        frames = inject_fault(frames, joint, start, fault_length, axis=int(rng.integers(0, 3)))
        out.append(Sequence(frames, label="incorrect", subject=0, seq_id=f"bad{i - n_correct}",
                            meta={"fault": (joint, start, fault_length)}))
    return out
