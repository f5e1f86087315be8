"""Datasets: CSV rollouts, sliding windows, splits, IDX images, generators.

A rollout is one contiguous trajectory of observations (and optionally the
actions taken alongside them). Training batches are sliding windows that
never cross a rollout boundary, and train/val/test splitting happens at
rollout granularity so overlapping windows cannot leak between splits.
"""

from __future__ import annotations

import csv
import json
import math
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

__all__ = [
    "Rollout",
    "SequenceBatch",
    "Split",
    "Standardizer",
    "load_rollouts",
    "save_rollout_csv",
    "make_windows",
    "split",
    "read_idx",
    "write_idx",
    "mnist_sequences",
    "gen_synthetic",
]

TASKS = ("predict-next-observation", "behavioural-cloning")
SYNTHETIC_TASKS = ("damped-oscillator", "driven-pendulum")


@dataclass
class Rollout:
    """One trajectory: obs (T, d) and, when recorded, actions (T, k)."""

    obs: np.ndarray
    actions: Optional[np.ndarray] = None
    name: str = ""

    def __post_init__(self):
        self.obs = np.asarray(self.obs, dtype=np.float64)
        if self.obs.ndim != 2:
            raise ValueError(f"rollout {self.name!r}: obs must be 2-D, got {self.obs.ndim}-D")
        if not np.all(np.isfinite(self.obs)):
            raise ValueError(f"rollout {self.name!r}: obs contain NaN or Inf")
        if self.actions is not None:
            self.actions = np.asarray(self.actions, dtype=np.float64)
            if self.actions.ndim != 2 or self.actions.shape[0] != self.obs.shape[0]:
                raise ValueError(
                    f"rollout {self.name!r}: actions shape {self.actions.shape} "
                    f"inconsistent with obs length {self.obs.shape[0]}"
                )
            if not np.all(np.isfinite(self.actions)):
                raise ValueError(f"rollout {self.name!r}: actions contain NaN or Inf")

    @property
    def length(self) -> int:
        return self.obs.shape[0]

    @property
    def n_features(self) -> int:
        return self.obs.shape[1]


@dataclass
class SequenceBatch:
    """Windows ready for training.

    inputs (B, L, d); targets (B, d') for regression or (B,) integer class
    labels; rollout_ids says which rollout each window was cut from; lengths
    is the per-window time length (constant L here, kept explicit).
    """

    inputs: np.ndarray
    targets: np.ndarray
    rollout_ids: np.ndarray
    lengths: np.ndarray

    def __post_init__(self):
        self.inputs = np.asarray(self.inputs, dtype=np.float64)
        self.rollout_ids = np.asarray(self.rollout_ids, dtype=np.int64)
        self.lengths = np.asarray(self.lengths, dtype=np.int64)
        if self.inputs.ndim != 3:
            raise ValueError(f"inputs must be (B, L, d), got shape {self.inputs.shape}")
        b = self.inputs.shape[0]
        if not (self.targets.shape[0] == self.rollout_ids.shape[0] == self.lengths.shape[0] == b):
            raise ValueError("inputs, targets, rollout_ids, lengths disagree on batch size")

    @property
    def size(self) -> int:
        return self.inputs.shape[0]

    @property
    def seq_len(self) -> int:
        return self.inputs.shape[1]

    @property
    def n_features(self) -> int:
        return self.inputs.shape[2]

    @property
    def classification(self) -> bool:
        return np.issubdtype(self.targets.dtype, np.integer)

    def subset(self, idx) -> "SequenceBatch":
        idx = np.asarray(idx)
        return SequenceBatch(
            self.inputs[idx], self.targets[idx], self.rollout_ids[idx], self.lengths[idx]
        )


# ---------------------------------------------------------------------------
# CSV rollout files
#
# One file per rollout. The header names observation columns obs_0..obs_{d-1}
# followed by action columns act_0..act_{k-1}; every later line holds one
# time step of float cells.


def _parse_header(path: Path, header: List[str]) -> Tuple[int, int]:
    n_obs = 0
    while n_obs < len(header) and header[n_obs] == f"obs_{n_obs}":
        n_obs += 1
    if n_obs == 0:
        raise ValueError(f"{path}: header column 1 must be 'obs_0', found {header[0] if header else ''!r}")
    n_act = 0
    for col in header[n_obs:]:
        if col != f"act_{n_act}":
            raise ValueError(
                f"{path}: header column {n_obs + n_act + 1} must be "
                f"'obs_{n_obs}' or 'act_{n_act}', found {col!r}"
            )
        n_act += 1
    return n_obs, n_act


def _load_one_csv(path: Path) -> Rollout:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        rows = list(reader)
    rows = [r for r in rows if r]  # drop blank lines
    if not rows:
        raise ValueError(f"{path}: empty file")
    n_obs, n_act = _parse_header(path, [c.strip() for c in rows[0]])
    width = n_obs + n_act
    if len(rows) < 2:
        raise ValueError(f"{path}: no data rows")
    data = np.empty((len(rows) - 1, width))
    for r, row in enumerate(rows[1:], start=2):
        if len(row) != width:
            raise ValueError(f"{path} line {r}: expected {width} cells, found {len(row)}")
        for c, cell in enumerate(row):
            try:
                data[r - 2, c] = float(cell)
            except ValueError:
                raise ValueError(
                    f"{path} line {r} column {c + 1}: could not parse {cell.strip()!r} as a number"
                ) from None
    if not np.all(np.isfinite(data)):
        raise ValueError(f"{path}: contains NaN or Inf")
    actions = data[:, n_obs:] if n_act else None
    return Rollout(obs=data[:, :n_obs], actions=actions, name=path.stem)


def load_rollouts(dir_path) -> List[Rollout]:
    """Load every *.csv under a directory, enforcing consistent widths."""
    root = Path(dir_path)
    if not root.is_dir():
        raise ValueError(f"{root}: not a directory")
    rollouts = []
    first: Optional[Tuple[Path, int, int]] = None
    for path in sorted(root.glob("*.csv")):
        ro = _load_one_csv(path)
        k = 0 if ro.actions is None else ro.actions.shape[1]
        if first is None:
            first = (path, ro.n_features, k)
        elif (ro.n_features, k) != first[1:]:
            raise ValueError(
                f"{path} has {ro.n_features} observation and {k} action columns, "
                f"but {first[0]} has {first[1]} and {first[2]}"
            )
        rollouts.append(ro)
    return rollouts


def save_rollout_csv(rollout: Rollout, path) -> None:
    """Write one rollout in the format load_rollouts reads."""
    path = Path(path)
    k = 0 if rollout.actions is None else rollout.actions.shape[1]
    header = [f"obs_{i}" for i in range(rollout.n_features)] + [f"act_{j}" for j in range(k)]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for t in range(rollout.length):
            row = list(rollout.obs[t])
            if k:
                row += list(rollout.actions[t])
            writer.writerow([repr(float(v)) for v in row])


# ---------------------------------------------------------------------------
# windows and splits


def make_windows(rollouts: Sequence[Rollout], window: int, task: str) -> SequenceBatch:
    """Cut stride-1 sliding windows that stay inside their rollout.

    predict-next-observation: inputs obs[t .. t+window), target obs[t+window].
    behavioural-cloning: same inputs, target actions[t+window].
    Each rollout of length T contributes exactly T - window windows.
    """
    if task not in TASKS:
        raise ValueError(f"unknown task {task!r}, expected one of {TASKS}")
    if window < 1:
        raise ValueError("window length must be >= 1")
    if not rollouts:
        raise ValueError("no rollouts given")
    inputs, targets, ids = [], [], []
    for rid, ro in enumerate(rollouts):
        if ro.length <= window:
            raise ValueError(
                f"rollout {ro.name or rid!r} has length {ro.length} <= window {window}"
            )
        if task == "behavioural-cloning" and ro.actions is None:
            raise ValueError(f"rollout {ro.name or rid!r} has no actions for behavioural-cloning")
        source = ro.obs if task == "predict-next-observation" else ro.actions
        for t in range(ro.length - window):
            inputs.append(ro.obs[t : t + window])
            targets.append(source[t + window])
            ids.append(rid)
    inputs = np.stack(inputs)
    return SequenceBatch(
        inputs=inputs,
        targets=np.stack(targets),
        rollout_ids=np.array(ids),
        lengths=np.full(len(ids), window),
    )


@dataclass
class Split:
    train: SequenceBatch
    val: SequenceBatch
    test: SequenceBatch
    manifest: Dict


def split(
    batch: SequenceBatch,
    test_fraction: float = 0.15,
    val_fraction: float = 0.10,
    seed: int = 0,
) -> Split:
    """Partition windows by rollout so no trajectory spans two splits.

    Deterministic in the seed; the manifest records the assignment. The
    fractions apply to the number of rollouts (nearest integer).
    """
    if not (0.0 < test_fraction < 1.0 and 0.0 < val_fraction < 1.0):
        raise ValueError("fractions must lie strictly between 0 and 1")
    if test_fraction + val_fraction >= 1.0:
        raise ValueError("test and validation fractions must sum to less than 1")
    ids = np.unique(batch.rollout_ids)
    n = ids.shape[0]
    n_test = int(round(n * test_fraction))
    n_val = int(round(n * val_fraction))
    n_train = n - n_test - n_val
    if min(n_test, n_val, n_train) < 1:
        raise ValueError(
            f"too few rollouts to populate all splits: {n} rollouts give "
            f"train/val/test sizes {n_train}/{n_val}/{n_test}"
        )
    rng = np.random.default_rng(seed)
    perm = rng.permutation(ids)
    test_ids = np.sort(perm[:n_test])
    val_ids = np.sort(perm[n_test : n_test + n_val])
    train_ids = np.sort(perm[n_test + n_val :])

    def take(which):
        mask = np.isin(batch.rollout_ids, which)
        return batch.subset(np.flatnonzero(mask))

    manifest = {
        "seed": seed,
        "test_fraction": test_fraction,
        "val_fraction": val_fraction,
        "n_rollouts": int(n),
        "assignment": {
            "train": [int(i) for i in train_ids],
            "val": [int(i) for i in val_ids],
            "test": [int(i) for i in test_ids],
        },
    }
    return Split(train=take(train_ids), val=take(val_ids), test=take(test_ids), manifest=manifest)


@dataclass
class Standardizer:
    """Zero-mean unit-variance scaling fitted on the train split only."""

    input_mean: np.ndarray
    input_std: np.ndarray
    target_mean: Optional[np.ndarray]
    target_std: Optional[np.ndarray]

    @classmethod
    def fit(cls, train: SequenceBatch) -> "Standardizer":
        flat = train.inputs.reshape(-1, train.n_features)
        mean = flat.mean(axis=0)
        std = flat.std(axis=0)
        std = np.where(std < 1e-12, 1.0, std)
        if train.classification:
            t_mean = t_std = None
        else:
            t_mean = train.targets.mean(axis=0)
            t_std = train.targets.std(axis=0)
            t_std = np.where(t_std < 1e-12, 1.0, t_std)
        return cls(mean, std, t_mean, t_std)

    def apply(self, batch: SequenceBatch) -> SequenceBatch:
        inputs = (batch.inputs - self.input_mean) / self.input_std
        targets = batch.targets
        if self.target_mean is not None and not batch.classification:
            targets = (targets - self.target_mean) / self.target_std
        return SequenceBatch(inputs, targets, batch.rollout_ids.copy(), batch.lengths.copy())

    def invert_targets(self, y: np.ndarray) -> np.ndarray:
        if self.target_mean is None:
            return y
        return y * self.target_std + self.target_mean

    def to_dict(self) -> dict:
        return {
            "input_mean": self.input_mean.tolist(),
            "input_std": self.input_std.tolist(),
            "target_mean": None if self.target_mean is None else self.target_mean.tolist(),
            "target_std": None if self.target_std is None else self.target_std.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Standardizer":
        opt = lambda v: None if v is None else np.asarray(v, dtype=np.float64)
        return cls(
            np.asarray(d["input_mean"], dtype=np.float64),
            np.asarray(d["input_std"], dtype=np.float64),
            opt(d["target_mean"]),
            opt(d["target_std"]),
        )


# ---------------------------------------------------------------------------
# IDX image files (big-endian, magic 0x00000803 images / 0x00000801 labels)

_IDX_DTYPES = {0x08: np.uint8}


def read_idx(path) -> np.ndarray:
    """Read one IDX file into an array (uint8 payloads only)."""
    raw = Path(path).read_bytes()
    if len(raw) < 4:
        raise ValueError(f"{path}: truncated IDX header")
    zero1, zero2, code, ndim = struct.unpack(">BBBB", raw[:4])
    if zero1 != 0 or zero2 != 0:
        raise ValueError(f"{path}: bad IDX magic {raw[:4].hex()}")
    if code not in _IDX_DTYPES:
        raise ValueError(f"{path}: unsupported IDX dtype code 0x{code:02x}")
    if len(raw) < 4 + 4 * ndim:
        raise ValueError(f"{path}: truncated IDX dimension list")
    dims = struct.unpack(f">{ndim}I", raw[4 : 4 + 4 * ndim])
    payload = raw[4 + 4 * ndim :]
    expected = int(np.prod(dims)) if dims else 0
    if len(payload) != expected:
        raise ValueError(f"{path}: payload has {len(payload)} bytes, header promises {expected}")
    return np.frombuffer(payload, dtype=np.uint8).reshape(dims)


def write_idx(path, array: np.ndarray) -> None:
    """Write a uint8 array as an IDX file; inverse of read_idx."""
    array = np.ascontiguousarray(array, dtype=np.uint8)
    header = struct.pack(">BBBB", 0, 0, 0x08, array.ndim)
    header += struct.pack(f">{array.ndim}I", *array.shape)
    Path(path).write_bytes(header + array.tobytes())


def mnist_sequences(images_path, labels_path, limit: Optional[int] = None) -> SequenceBatch:
    """Turn an IDX image/label pair into row-by-row sequences.

    Every H-by-W image becomes a length-H sequence of W features scaled to
    [0, 1] (pixel 255 -> 1.0); labels become integer class targets. Each
    image is its own rollout for splitting purposes.
    """
    images = read_idx(images_path)
    labels = read_idx(labels_path)
    if images.ndim != 3:
        raise ValueError(f"{images_path}: expected 3-D image data, got {images.ndim}-D")
    if labels.ndim != 1:
        raise ValueError(f"{labels_path}: expected 1-D label data, got {labels.ndim}-D")
    if images.shape[0] != labels.shape[0]:
        raise ValueError(
            f"count mismatch: {images_path} has {images.shape[0]} images, "
            f"{labels_path} has {labels.shape[0]} labels"
        )
    if limit is not None:
        images = images[:limit]
        labels = labels[:limit]
    n, h, w = images.shape
    return SequenceBatch(
        inputs=images.astype(np.float64) / 255.0,
        targets=labels.astype(np.int64),
        rollout_ids=np.arange(n),
        lengths=np.full(n, h),
    )


# ---------------------------------------------------------------------------
# synthetic tasks


def gen_synthetic(
    task: str,
    n_rollouts: int,
    length: int,
    seed: int = 0,
    dt: float = 0.1,
    noise: float = 0.01,
    damping: Optional[float] = None,
) -> List[Rollout]:
    """Generate toy trajectories; deterministic in the seed.

    damped-oscillator: closed-form x(t) = e^(-z*w*t) (A cos wd*t + B sin wd*t)
    sampled every dt; obs = [position, velocity]; no actions. z is drawn in
    [0.05, 0.2] unless ``damping`` pins it; w in [0.8, 1.6]; A, B in
    [-1.5, 1.5] (re-drawn until the trajectory is non-trivial).

    driven-pendulum: theta'' = -sin(theta) - 0.3 theta' + torque with a
    sinusoidal torque drive, integrated by classic fourth-order Runge-Kutta;
    obs = [theta, theta'], actions = [torque] (behavioural-cloning ready).

    Gaussian observation noise of the given scale is added to obs.
    """
    if task not in SYNTHETIC_TASKS:
        raise ValueError(f"unknown synthetic task {task!r}, expected one of {SYNTHETIC_TASKS}")
    if n_rollouts < 1:
        raise ValueError("n_rollouts must be >= 1")
    if length < 2:
        raise ValueError("rollout length must be >= 2")
    rng = np.random.default_rng(seed)
    t = np.arange(length) * dt
    rollouts = []
    for r in range(n_rollouts):
        if task == "damped-oscillator":
            z = rng.uniform(0.05, 0.2) if damping is None else float(damping)
            w = rng.uniform(0.8, 1.6)
            amp_a, amp_b = rng.uniform(-1.5, 1.5, size=2)
            if abs(amp_a) + abs(amp_b) < 0.1:
                amp_a = 1.0
            wd = w * math.sqrt(max(1.0 - z * z, 1e-12))
            envelope = np.exp(-z * w * t)
            pos = envelope * (amp_a * np.cos(wd * t) + amp_b * np.sin(wd * t))
            vel = envelope * (
                (-z * w * amp_a + wd * amp_b) * np.cos(wd * t)
                + (-z * w * amp_b - wd * amp_a) * np.sin(wd * t)
            )
            obs = np.stack([pos, vel], axis=1)
            actions = None
        else:
            theta = rng.uniform(-0.5, 0.5)
            omega = rng.uniform(-0.5, 0.5)
            drive_amp = rng.uniform(0.3, 1.0)
            drive_freq = rng.uniform(0.5, 1.5)
            drive_phase = rng.uniform(0.0, 2.0 * math.pi)

            def torque(tt):
                return drive_amp * math.sin(drive_freq * tt + drive_phase)

            def f(state, tt):
                th, om = state
                return np.array([om, -math.sin(th) - 0.3 * om + torque(tt)])

            obs = np.empty((length, 2))
            actions = np.empty((length, 1))
            state = np.array([theta, omega])
            for i in range(length):
                obs[i] = state
                actions[i, 0] = torque(t[i])
                k1 = f(state, t[i])
                k2 = f(state + 0.5 * dt * k1, t[i] + 0.5 * dt)
                k3 = f(state + 0.5 * dt * k2, t[i] + 0.5 * dt)
                k4 = f(state + dt * k3, t[i] + dt)
                state = state + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        if noise > 0.0:
            obs = obs + rng.normal(0.0, noise, size=obs.shape)
        rollouts.append(Rollout(obs=obs, actions=actions, name=f"{task}-{r:03d}"))
    return rollouts
