"""Explicit-Euler integration of the model ODEs.

One input time step is integrated as ``unfolds`` Euler sub-steps of size
``dt`` with the input held constant (zero-order hold), which is exactly the
same arithmetic as augmenting the state with the input coordinates and
giving them zero derivative.

Tape-level functions (suffix ``_tape``) operate on tensors bound to the
current autodiff tape so training can backpropagate through the unrolled
solver; the plain functions take a ParameterSet and numpy arrays.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from . import autodiff as ad
from .models import (
    BoundParams,
    ModelSpec,
    ParameterSet,
    anode_wrap,
    bind_params,
    input_stage,
    output_tensor,
    state_derivative,
)

__all__ = [
    "Trajectory",
    "euler_step",
    "integrate_timestep",
    "rollout",
    "default_x0",
    "euler_step_tape",
    "integrate_timestep_tape",
    "unroll_tape",
]


def euler_step_tape(
    spec: ModelSpec, bp: BoundParams, x: ad.Tensor, token=None, dt: Optional[float] = None
) -> ad.Tensor:
    """One Euler sub-step x + dt*f(x) on the tape."""
    if dt is None:
        dt = spec.dt
    return ad.add(x, ad.scale(state_derivative(spec, bp, x, token), float(dt)))


def integrate_timestep_tape(
    spec: ModelSpec,
    bp: BoundParams,
    x: ad.Tensor,
    token=None,
    dt: Optional[float] = None,
    unfolds: Optional[int] = None,
) -> ad.Tensor:
    """One input time step: ``unfolds`` Euler sub-steps under a held input."""
    if unfolds is None:
        unfolds = spec.unfolds
    for _ in range(int(unfolds)):
        x = euler_step_tape(spec, bp, x, token, dt)
    return x


def unroll_tape(
    spec: ModelSpec, bp: BoundParams, x: ad.Tensor, tokens: Sequence
) -> List[ad.Tensor]:
    """Integrate a whole window, returning the state after every time step.

    tokens has one entry per time step (None for autonomous families); the
    returned list has the same length.
    """
    states = []
    for token in tokens:
        x = integrate_timestep_tape(spec, bp, x, token)
        states.append(x)
    return states


# ---------------------------------------------------------------------------
# plain-array API


def default_x0(spec: ModelSpec, params: ParameterSet) -> np.ndarray:
    """Initial state: the resting potential where one exists, zeros otherwise.

    Training the resting potential (learnable_rest) therefore also trains
    the initial state.
    """
    if "e_l" in params:
        return params.value("e_l")[0].copy()
    return np.zeros(spec.state_size)


def _as_state(spec: ModelSpec, x0) -> np.ndarray:
    x0 = np.asarray(x0, dtype=np.float64).reshape(-1)
    if spec.n_augment and x0.shape[0] == spec.n_neurons:
        x0 = anode_wrap(x0, spec.n_augment)
    if x0.shape[0] != spec.state_size:
        raise ValueError(
            f"x0 has length {x0.shape[0]}, expected {spec.state_size}"
            + (f" (or {spec.n_neurons} before augmentation)" if spec.n_augment else "")
        )
    if not np.all(np.isfinite(x0)):
        raise ValueError("x0 contains NaN or Inf")
    return x0


def euler_step(spec: ModelSpec, params: ParameterSet, x, u=None, dt: Optional[float] = None) -> np.ndarray:
    """One Euler sub-step as plain arrays."""
    x = _as_state(spec, x)
    bp = bind_params(spec, params, for_grad=False)
    token = None
    if spec.input_mode != "none":
        if u is None:
            raise ValueError(f"input_mode={spec.input_mode!r} requires u")
        u = np.asarray(u, dtype=np.float64).reshape(1, -1)
        token = input_stage(spec, bp, ad.constant(u))
    elif u is not None:
        raise ValueError("u supplied but spec has input_mode='none'")
    return euler_step_tape(spec, bp, ad.constant(x.reshape(1, -1)), token, dt).value[0].copy()


def integrate_timestep(
    spec: ModelSpec,
    params: ParameterSet,
    x,
    u=None,
    dt: Optional[float] = None,
    unfolds: Optional[int] = None,
) -> np.ndarray:
    """Advance the state through one full input time step."""
    x = _as_state(spec, x)
    bp = bind_params(spec, params, for_grad=False)
    token = None
    if spec.input_mode != "none":
        if u is None:
            raise ValueError(f"input_mode={spec.input_mode!r} requires u")
        u = np.asarray(u, dtype=np.float64).reshape(1, -1)
        token = input_stage(spec, bp, ad.constant(u))
    elif u is not None:
        raise ValueError("u supplied but spec has input_mode='none'")
    out = integrate_timestep_tape(spec, bp, ad.constant(x.reshape(1, -1)), token, dt, unfolds)
    return out.value[0].copy()


@dataclass
class Trajectory:
    """A rollout: states[0] is the initial state, outputs[t] reads states[t+1]."""

    states: np.ndarray  # (T+1, state_size)
    outputs: np.ndarray  # (T, n_outputs)

    @property
    def horizon(self) -> int:
        return self.outputs.shape[0]


def rollout(
    spec: ModelSpec,
    params: ParameterSet,
    inputs=None,
    x0=None,
    horizon: Optional[int] = None,
    dt: Optional[float] = None,
    unfolds: Optional[int] = None,
) -> Trajectory:
    """Integrate a trajectory and read it out.

    With an input-driven spec, ``inputs`` is a (T, n_inputs) array and sets
    the horizon. Autonomous families take ``horizon`` directly. x0 defaults
    to the resting potential; an anode x0 of length n_neurons is wrapped
    with zeros automatically.
    """
    if spec.input_mode != "none":
        if inputs is None:
            raise ValueError(f"input_mode={spec.input_mode!r} requires inputs")
        inputs = np.asarray(inputs, dtype=np.float64)
        if inputs.ndim == 1:
            inputs = inputs.reshape(-1, 1)
        if inputs.ndim != 2 or inputs.shape[1] != spec.n_inputs:
            raise ValueError(
                f"inputs has shape {inputs.shape}, expected (T, {spec.n_inputs})"
            )
        if not np.all(np.isfinite(inputs)):
            raise ValueError("inputs contain NaN or Inf")
        if horizon is not None and horizon != inputs.shape[0]:
            raise ValueError(
                f"horizon={horizon} disagrees with inputs of length {inputs.shape[0]}"
            )
        steps = inputs.shape[0]
    else:
        if inputs is not None:
            raise ValueError("inputs supplied but spec has input_mode='none'")
        if horizon is None:
            raise ValueError("autonomous rollout requires a horizon")
        if horizon < 1:
            raise ValueError("horizon must be >= 1")
        steps = int(horizon)

    x = _as_state(spec, default_x0(spec, params) if x0 is None else x0)
    bp = bind_params(spec, params, for_grad=False)

    states = np.empty((steps + 1, spec.state_size))
    outputs = np.empty((steps, spec.n_outputs))
    states[0] = x
    xt = ad.constant(x.reshape(1, -1))
    for t in range(steps):
        token = None
        if inputs is not None:
            token = input_stage(spec, bp, ad.constant(inputs[t].reshape(1, -1)))
        xt = integrate_timestep_tape(spec, bp, xt, token, dt, unfolds)
        states[t + 1] = xt.value[0]
        outputs[t] = output_tensor(spec, bp, xt).value[0]
        # re-root the tape so memory stays flat over long horizons
        xt = ad.constant(xt.value)
    return Trajectory(states=states, outputs=outputs)
