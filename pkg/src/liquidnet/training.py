"""Losses, Adam with constraint projection, and the training loop.

A training step unrolls the Euler solver over a window of inputs, reads the
final state out linearly, and backpropagates through the whole unrolled
graph. After every optimizer step the sign-constrained tables (conductances,
slopes, capacitance) are projected back to be non-negative.
"""

from __future__ import annotations

import csv
import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np

from . import autodiff as ad
from .data import SequenceBatch
from .models import (
    ModelSpec,
    ParameterSet,
    bind_params,
    clamp_params,
    init_params,
    input_stage,
    output_tensor,
)
from .solver import unroll_tape

__all__ = [
    "mse_loss",
    "cross_entropy_loss",
    "mse_loss_tensor",
    "cross_entropy_loss_tensor",
    "AdamState",
    "adam_step",
    "loss_and_gradients",
    "evaluate",
    "TrainReport",
    "TrainResult",
    "train",
]


# ---------------------------------------------------------------------------
# losses


def mse_loss(pred, target) -> float:
    """Mean over every element of the squared error."""
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise ValueError(f"shape mismatch: pred {pred.shape} vs target {target.shape}")
    diff = pred - target
    return float(np.mean(diff * diff))


def mse_loss_tensor(pred: ad.Tensor, target: np.ndarray) -> ad.Tensor:
    target = np.asarray(target, dtype=np.float64)
    if pred.value.shape != target.shape:
        raise ValueError(f"shape mismatch: pred {pred.value.shape} vs target {target.shape}")
    diff = ad.sub(pred, ad.constant(target))
    return ad.mean(ad.mul(diff, diff))


def _check_labels(labels, n_classes: int) -> np.ndarray:
    labels = np.asarray(labels)
    if labels.min() < 0 or labels.max() >= n_classes:
        raise ValueError(
            f"label out of range: values span [{labels.min()}, {labels.max()}], "
            f"but there are {n_classes} classes"
        )
    return labels.astype(np.int64)


def cross_entropy_loss(logits, labels) -> float:
    """-log softmax(logits)[label], averaged over a batch, max-stabilized."""
    logits = np.asarray(logits, dtype=np.float64)
    if logits.ndim == 1:
        logits = logits.reshape(1, -1)
        labels = np.asarray(labels).reshape(1)
    labels = _check_labels(labels, logits.shape[1])
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_z = np.log(np.exp(shifted).sum(axis=1))
    picked = shifted[np.arange(logits.shape[0]), labels]
    return float(np.mean(log_z - picked))


def cross_entropy_loss_tensor(logits: ad.Tensor, labels) -> ad.Tensor:
    """Tape version; the stabilizing max is a constant, which leaves the
    gradient exact because softmax is shift invariant."""
    b, k = logits.value.shape
    labels = _check_labels(labels, k)
    shift = ad.constant(logits.value.max(axis=1, keepdims=True))
    shifted = ad.sub(logits, shift)
    log_z = ad.log(ad.tsum(ad.exp(shifted), axis=1))
    onehot = np.zeros((b, k))
    onehot[np.arange(b), labels] = 1.0
    picked = ad.tsum(ad.mul(shifted, ad.constant(onehot)), axis=1)
    return ad.mean(ad.sub(log_z, picked))


# ---------------------------------------------------------------------------
# optimizer


@dataclass
class AdamState:
    """Bias-corrected Adam moments for every trainable table."""

    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: Dict[str, np.ndarray] = field(default_factory=dict)
    v: Dict[str, np.ndarray] = field(default_factory=dict)

    @classmethod
    def for_params(cls, params: ParameterSet, **kw) -> "AdamState":
        state = cls(**kw)
        for name, p in params.items():
            if p.trainable:
                state.m[name] = np.zeros_like(p.value)
                state.v[name] = np.zeros_like(p.value)
        return state


def adam_step(
    params: ParameterSet, grads: Dict[str, np.ndarray], opt: AdamState
) -> Tuple[ParameterSet, AdamState, int]:
    """One in-place Adam update followed by the non-negativity projection.

    Only trainable tables present in ``grads`` move. Returns the params, the
    optimizer state, and how many entries the projection clamped.
    """
    opt.step += 1
    b1t = 1.0 - opt.beta1**opt.step
    b2t = 1.0 - opt.beta2**opt.step
    for name, g in grads.items():
        p = params[name]
        if not p.trainable:
            continue
        g = np.asarray(g, dtype=np.float64)
        if not np.all(np.isfinite(g)):
            raise ValueError(f"non-finite gradient for parameter table {name!r}")
        if g.shape != p.value.shape:
            raise ValueError(
                f"gradient for {name!r} has shape {g.shape}, parameter is {p.value.shape}"
            )
        m = opt.m[name]
        v = opt.v[name]
        m *= opt.beta1
        m += (1.0 - opt.beta1) * g
        v *= opt.beta2
        v += (1.0 - opt.beta2) * (g * g)
        p.value -= opt.lr * (m / b1t) / (np.sqrt(v / b2t) + opt.eps)
    _, n_clamped = clamp_params(params)
    return params, opt, n_clamped


# ---------------------------------------------------------------------------
# batched forward pass


def _forward_batch(spec: ModelSpec, bp, inputs: np.ndarray) -> ad.Tensor:
    """Unroll a window batch (B, L, d) and read out the final state."""
    b, seq_len, d = inputs.shape
    if spec.input_mode != "none":
        if d != spec.n_inputs:
            raise ValueError(f"batch has {d} features, spec expects {spec.n_inputs}")
        tokens = [
            input_stage(spec, bp, ad.constant(np.ascontiguousarray(inputs[:, t, :])))
            for t in range(seq_len)
        ]
    else:
        tokens = [None] * seq_len
    if "e_l" in bp.tensors:
        x0 = bp.tensors["e_l"]  # (1, n); broadcasting carries it across the batch
    else:
        x0 = ad.constant(np.zeros((1, spec.state_size)))
    states = unroll_tape(spec, bp, x0, tokens)
    return output_tensor(spec, bp, states[-1])


def _batch_loss_tensor(spec: ModelSpec, bp, batch_inputs, batch_targets) -> ad.Tensor:
    pred = _forward_batch(spec, bp, batch_inputs)
    if np.issubdtype(np.asarray(batch_targets).dtype, np.integer):
        return cross_entropy_loss_tensor(pred, batch_targets)
    target = np.asarray(batch_targets, dtype=np.float64)
    if pred.value.shape == target.shape:
        return mse_loss_tensor(pred, target)
    # autonomous models produce one shared prediction row for the batch;
    # let the subtraction broadcast it against every target row
    diff = ad.sub(pred, ad.constant(target))
    return ad.mean(ad.mul(diff, diff))


def loss_and_gradients(
    spec: ModelSpec, params: ParameterSet, inputs: np.ndarray, targets
) -> Tuple[float, Dict[str, np.ndarray]]:
    """Loss of one window batch plus gradients for every trainable table."""
    bp = bind_params(spec, params, for_grad=True)
    loss = _batch_loss_tensor(spec, bp, np.asarray(inputs, dtype=np.float64), targets)
    value = float(loss.value[0, 0])
    if not math.isfinite(value):
        return value, {}
    grads = ad.gradient(loss, bp.trainable_tensors())
    return value, bp.grads_by_name(grads)


def evaluate(
    spec: ModelSpec, params: ParameterSet, batch: SequenceBatch, chunk: int = 256
) -> Dict[str, float]:
    """Loss (and accuracy for classification) over a whole batch."""
    total = 0.0
    correct = 0
    n = batch.size
    classification = batch.classification
    for start in range(0, n, chunk):
        stop = min(start + chunk, n)
        bp = bind_params(spec, params, for_grad=False)
        pred = _forward_batch(spec, bp, batch.inputs[start:stop]).value
        if classification:
            labels = batch.targets[start:stop]
            total += cross_entropy_loss(pred, labels) * (stop - start)
            correct += int(np.sum(np.argmax(pred, axis=1) == labels))
        else:
            target = np.asarray(batch.targets[start:stop], dtype=np.float64)
            if pred.shape[0] == 1 and target.shape[0] > 1:
                pred = np.broadcast_to(pred, target.shape)
            total += mse_loss(pred, target) * (stop - start)
    out = {"loss": total / n}
    if classification:
        out["accuracy"] = correct / n
    return out


# ---------------------------------------------------------------------------
# the training loop


@dataclass
class TrainReport:
    """Everything one run produced, ready for JSON."""

    seed: int
    spec: dict
    descriptor: str
    epochs_run: int
    train_loss: List[float]
    val_loss: List[Optional[float]]
    clamp_counts: List[int]
    elapsed_seconds: float
    best_epoch: Optional[int]
    test_metrics: Dict[str, float]
    diverged_at_epoch: Optional[int] = None

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "spec": self.spec,
            "descriptor": self.descriptor,
            "epochs_run": self.epochs_run,
            "train_loss": self.train_loss,
            "val_loss": self.val_loss,
            "clamp_counts": self.clamp_counts,
            "elapsed_seconds": self.elapsed_seconds,
            "best_epoch": self.best_epoch,
            "test_metrics": self.test_metrics,
            "diverged_at_epoch": self.diverged_at_epoch,
        }

    def save_json(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2))

    def save_losses_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["epoch", "train_loss", "val_loss"])
            for i, (tr, va) in enumerate(zip(self.train_loss, self.val_loss), start=1):
                writer.writerow([i, repr(tr), "" if va is None else repr(va)])


@dataclass
class TrainResult:
    params: ParameterSet  # best-validation parameters
    report: TrainReport


def train(
    spec: ModelSpec,
    train_batch: SequenceBatch,
    val_batch: Optional[SequenceBatch] = None,
    test_batch: Optional[SequenceBatch] = None,
    *,
    epochs: int,
    seed: int = 0,
    lr: float = 1e-3,
    batch_size: int = 32,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
    descriptor: str = "",
    init: Optional[ParameterSet] = None,
) -> TrainResult:
    """Mini-batch training with best-validation checkpointing.

    Deterministic in the seed: initialization and the per-epoch shuffles are
    the only randomness. A non-finite loss or gradient stops the run and is
    recorded as the divergence epoch; everything gathered so far stays in
    the report.
    """
    if epochs < 0:
        raise ValueError("epochs must be >= 0")
    if train_batch.size < 1:
        raise ValueError("training split is empty")
    t0 = time.perf_counter()
    params = init.copy() if init is not None else init_params(spec, seed)
    opt = AdamState.for_params(params, lr=lr, beta1=beta1, beta2=beta2, eps=eps)
    rng = np.random.default_rng(seed)

    train_losses: List[float] = []
    val_losses: List[Optional[float]] = []
    clamp_counts: List[int] = []
    best_val = math.inf
    best_params = params.copy()
    best_epoch: Optional[int] = None
    diverged_at: Optional[int] = None

    for epoch in range(1, epochs + 1):
        order = rng.permutation(train_batch.size)
        epoch_loss = 0.0
        epoch_clamped = 0
        diverged = False
        for start in range(0, train_batch.size, batch_size):
            idx = order[start : start + batch_size]
            value, grads = loss_and_gradients(
                spec, params, train_batch.inputs[idx], train_batch.targets[idx]
            )
            if not math.isfinite(value):
                diverged = True
                break
            try:
                params, opt, n_clamped = adam_step(params, grads, opt)
            except ValueError:
                diverged = True
                break
            epoch_loss += value * len(idx)
            epoch_clamped += n_clamped
        if diverged:
            diverged_at = epoch
            break

        train_losses.append(epoch_loss / train_batch.size)
        clamp_counts.append(epoch_clamped)
        if val_batch is not None and val_batch.size:
            val = evaluate(spec, params, val_batch)["loss"]
            val_losses.append(val)
            if val < best_val:
                best_val = val
                best_params = params.copy()
                best_epoch = epoch
        else:
            val_losses.append(None)

    if best_epoch is None:
        # no validation signal (or no epochs); keep the final parameters
        best_params = params.copy()

    test_metrics: Dict[str, float] = {}
    if test_batch is not None and test_batch.size:
        test_metrics = {f"test_{k}": v for k, v in evaluate(spec, best_params, test_batch).items()}

    report = TrainReport(
        seed=seed,
        spec=spec.to_dict(),
        descriptor=descriptor,
        epochs_run=len(train_losses),
        train_loss=train_losses,
        val_loss=val_losses,
        clamp_counts=clamp_counts,
        elapsed_seconds=time.perf_counter() - t0,
        best_epoch=best_epoch,
        test_metrics=test_metrics,
        diverged_at_epoch=diverged_at,
    )
    return TrainResult(params=best_params, report=report)
