"""Model families: specs, parameters, and the state-derivative function.

Five ODE families over a shared state vector x (and optional input u):

* ``neural-ode``   dx = W.act(x + b)                      (no decay)
* ``anode``        neural-ode on a zero-augmented state
* ``act-rnn``      dx = -w_l*x + synapses(x)              (autonomous)
* ``ct-rnn``       dx = -w_l*x + synapses(x) + inputs(u)
* ``ltc``          C*dx = w_l*(e_l - x) + gated synapses, where every synapse
                   current is conductance * (e - x_post): the driving-force
                   gate that closes the synapse at its reversal potential.

Wiring selects the granularity of activation parameters: ``synaptic`` gives
every synapse its own (a, b) so tables are (n_pre, n_post) matrices;
``neural`` shares them across a neuron's outgoing synapses so a and b are
length-n vectors (w stays a matrix).  The w_mode picks one of four synapse
parameterizations; see ``_syn_static``.

Batched evaluation keeps everything rank 2: a batch of states is a (B, n)
matrix, and per-synapse intermediates are flattened to (B, n_pre*n_post)
columns using constant 0/1 selector matrices, which is value-identical to
looping over batch elements.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, asdict
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Tuple

import numpy as np

from . import autodiff as ad

__all__ = [
    "ModelSpec",
    "Param",
    "ParameterSet",
    "init_params",
    "clamp_params",
    "count_params",
    "derivative",
    "input_map",
    "output_map",
    "anode_wrap",
    "anode_project",
    "save_checkpoint",
    "load_checkpoint",
    "bind_params",
    "state_derivative",
    "input_stage",
    "input_apply",
    "output_tensor",
]

FAMILIES = ("neural-ode", "anode", "act-rnn", "ct-rnn", "ltc")
ACTIVATIONS = ("sigmoid", "tanh")
WIRINGS = ("neural", "synaptic")
INPUT_MODES = ("none", "linear", "synaptic")
W_MODES = ("plain", "r", "v", "affine")
GATES = ("none", "one-minus", "reversal")

_WIRING_ALIASES = {"neural-activation": "neural", "synaptic-activation": "synaptic"}
_AUTONOMOUS = ("neural-ode", "act-rnn")
_DECAYING = ("act-rnn", "ct-rnn", "ltc")
# families whose neural-wired form is w*act(x+b) with no slope vector
_NO_SLOPE_NEURAL = ("neural-ode", "anode", "act-rnn")


@dataclass
class ModelSpec:
    """Everything needed to size, initialize, and evaluate one model.

    Args:
        family: one of ``neural-ode, anode, act-rnn, ct-rnn, ltc``.
        n_neurons: state dimension (before augmentation).
        activation: ``sigmoid`` or ``tanh``; reversal gating (ltc) requires
            sigmoid, tanh there destabilizes the dynamics and is rejected.
        wiring: ``synaptic`` for per-synapse activation tables, ``neural``
            for per-neuron vectors.
        input_mode: ``none``, ``linear`` (A_in*u + b_in), or ``synaptic``
            (inputs enter through the same synapse machinery).
        n_inputs: input dimension; must be 0 iff input_mode is ``none``.
        n_outputs: linear readout width.
        w_mode: synapse parameterization, one of
            ``plain``  a * act(w*x + b)
            ``r``      w * act(x + b)
            ``v``      w * act(a*(x + b))          (default)
            ``affine`` w * act(a*x + b)
            Neural-wired autonomous families (neural-ode, act-rnn) have no
            slope vector at all and always use the ``r`` form.
        gate: synapse current gate: ``none``, ``one-minus`` ((1 - x_post),
            a ct-rnn variant), or ``reversal`` ((e - x_post), ltc only).
            Defaults to ``reversal`` for ltc and ``none`` otherwise.
        learnable_rest: make the resting potential e_l a trainable parameter
            (and with it the default initial state).
        n_augment: zero-padded extra state dims, anode only.
        dt: Euler sub-step size.
        unfolds: Euler sub-steps per input time step.
    """

    family: str
    n_neurons: int
    activation: str = "sigmoid"
    wiring: str = "synaptic"
    input_mode: str = "none"
    n_inputs: int = 0
    n_outputs: int = 1
    w_mode: str = "v"
    gate: Optional[str] = None
    learnable_rest: bool = False
    n_augment: int = 0
    dt: float = 0.1
    unfolds: int = 10

    def __post_init__(self):
        self.wiring = _WIRING_ALIASES.get(self.wiring, self.wiring)
        if self.gate is None:
            self.gate = "reversal" if self.family == "ltc" else "none"
        self._validate()

    def _validate(self) -> None:
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}, expected one of {FAMILIES}")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")
        if self.wiring not in WIRINGS:
            raise ValueError(f"unknown wiring {self.wiring!r}")
        if self.input_mode not in INPUT_MODES:
            raise ValueError(f"unknown input_mode {self.input_mode!r}")
        if self.w_mode not in W_MODES:
            raise ValueError(f"unknown w_mode {self.w_mode!r}")
        if self.gate not in GATES:
            raise ValueError(f"unknown gate {self.gate!r}")
        if self.n_neurons < 1:
            raise ValueError("neurons must be >= 1")
        if self.family == "ltc":
            if self.activation != "sigmoid":
                raise ValueError(
                    "tanh with reversal gating is rejected: the driving-force gate "
                    "makes tanh dynamics unstable; use sigmoid"
                )
            if self.gate != "reversal":
                raise ValueError("ltc always uses the reversal gate")
        else:
            if self.gate == "reversal":
                raise ValueError(f"reversal gate requires family=ltc, got {self.family!r}")
        if self.family in ("neural-ode", "anode") and self.gate != "none":
            raise ValueError(f"{self.family} supports no synapse gate")
        if self.family in _AUTONOMOUS and self.input_mode != "none":
            raise ValueError(f"family {self.family!r} is autonomous; input_mode must be 'none'")
        if self.family == "ct-rnn" and self.input_mode == "none":
            raise ValueError("ct-rnn requires an input mode; the autonomous variant is act-rnn")
        if (self.input_mode == "none") != (self.n_inputs == 0):
            raise ValueError(
                f"n_inputs={self.n_inputs} inconsistent with input_mode={self.input_mode!r}"
            )
        if self.n_augment > 0 and self.family != "anode":
            raise ValueError("n_augment > 0 is anode-only")
        if self.family == "anode" and self.n_augment < 1:
            raise ValueError("anode requires n_augment >= 1")
        if self.learnable_rest and self.family not in _DECAYING:
            raise ValueError(f"learnable_rest needs a decay term; {self.family} has none")
        if self.n_outputs < 1:
            raise ValueError("n_outputs must be >= 1")
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.unfolds < 1:
            raise ValueError("unfolds must be >= 1")

    @property
    def state_size(self) -> int:
        return self.n_neurons + self.n_augment

    @property
    def effective_w_mode(self) -> str:
        """Neural-wired ode and act-rnn families carry no slope: w*act(x+b)."""
        if self.wiring == "neural" and self.family in _NO_SLOPE_NEURAL:
            return "r"
        return self.w_mode

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ModelSpec":
        return cls(**d)


# ---------------------------------------------------------------------------
# parameter tables


@dataclass
class Param:
    """One named parameter table with its training flags."""

    name: str
    value: np.ndarray
    trainable: bool = True
    lower_bounded: bool = False  # clamped at zero after every optimizer step
    counted: bool = True  # belongs to the recurrent-layer parameter count

    def copy(self) -> "Param":
        return Param(self.name, self.value.copy(), self.trainable, self.lower_bounded, self.counted)


@dataclass(frozen=True)
class _TableDef:
    name: str
    shape: Tuple[int, int]
    init: tuple  # ("uniform", lo, hi) | ("pm_one",) | ("const", v)
    trainable: bool = True
    lower_bounded: bool = False
    counted: bool = True


def _table_defs(spec: ModelSpec) -> List[_TableDef]:
    """Allocation plan: which tables exist, their shapes, init rules, flags.

    The draw order of init_params is exactly the order of this list.
    """
    n = spec.state_size
    m = spec.n_inputs
    sa = spec.wiring == "synaptic"
    ltc = spec.family == "ltc"
    defs: List[_TableDef] = []

    # recurrent synapses
    defs.append(_TableDef("w", (n, n), ("uniform", 0.01, 1.0), lower_bounded=True))
    has_slope = sa or spec.family not in _NO_SLOPE_NEURAL
    if has_slope:
        defs.append(_TableDef("a", (n, n) if sa else (1, n), ("uniform", 3.0, 8.0), lower_bounded=True))
    defs.append(_TableDef("b", (n, n) if sa else (1, n), ("uniform", 0.3, 0.8)))
    if ltc:
        defs.append(_TableDef("e", (n, n) if sa else (1, n), ("pm_one",)))

    # decay / leak
    if spec.family in _DECAYING:
        defs.append(_TableDef("w_l", (1, n), ("uniform", 0.01, 1.0)))
        if ltc or spec.learnable_rest:
            defs.append(_TableDef("e_l", (1, n), ("const", 0.0), trainable=spec.learnable_rest))
    if ltc:
        defs.append(_TableDef("C", (1, n), ("const", 1.0), trainable=False, lower_bounded=True))

    # input map
    if spec.input_mode == "linear":
        defs.append(_TableDef("A_in", (m, n), ("uniform", -0.1, 0.1)))
        defs.append(_TableDef("b_in", (1, n), ("const", 0.0), counted=False))
    elif spec.input_mode == "synaptic":
        defs.append(_TableDef("v", (m, n), ("uniform", 0.01, 1.0), lower_bounded=True))
        defs.append(_TableDef("a_u", (m, n) if sa else (1, m), ("uniform", 3.0, 8.0), lower_bounded=True))
        defs.append(_TableDef("b_u", (m, n) if sa else (1, m), ("uniform", 0.3, 0.8)))
        if ltc and sa:
            # input synapses get their own reversal table; neural wiring
            # shares the per-neuron e vector instead
            defs.append(_TableDef("e_u", (m, n), ("pm_one",)))

    # linear readout, excluded from the packing count
    defs.append(_TableDef("A_out", (spec.n_neurons, spec.n_outputs), ("uniform", -0.1, 0.1), counted=False))
    defs.append(_TableDef("b_out", (1, spec.n_outputs), ("const", 0.0), counted=False))
    return defs


class ParameterSet:
    """Ordered collection of named Param tables for one ModelSpec."""

    def __init__(self, spec: ModelSpec, tables: Dict[str, Param], seed: Optional[int] = None):
        self.spec = spec
        self._tables = dict(tables)
        self.seed = seed

    def __getitem__(self, name: str) -> Param:
        return self._tables[name]

    def __contains__(self, name: str) -> bool:
        return name in self._tables

    def __iter__(self) -> Iterable[str]:
        return iter(self._tables)

    def names(self) -> List[str]:
        return list(self._tables)

    def items(self) -> Iterable[Tuple[str, Param]]:
        return self._tables.items()

    def value(self, name: str) -> np.ndarray:
        return self._tables[name].value

    def copy(self) -> "ParameterSet":
        return ParameterSet(self.spec, {k: p.copy() for k, p in self._tables.items()}, self.seed)

    def counted_size(self) -> int:
        return sum(p.value.size for p in self._tables.values() if p.counted)

    def n_trainable(self) -> int:
        return sum(p.value.size for p in self._tables.values() if p.trainable)

    def validate_shapes(self) -> None:
        """Check the tables match the ModelSpec's allocation plan."""
        defs = {d.name: d for d in _table_defs(self.spec)}
        if set(defs) != set(self._tables):
            raise ValueError(
                f"parameter tables {sorted(self._tables)} do not match "
                f"spec's expected {sorted(defs)}"
            )
        for name, d in defs.items():
            got = self._tables[name].value.shape
            if got != d.shape:
                raise ValueError(f"table {name!r} has shape {got}, expected {d.shape}")

    def __repr__(self) -> str:
        return f"ParameterSet({self.spec.family}, tables={self.names()})"


def init_params(spec: ModelSpec, seed: int) -> ParameterSet:
    """Draw a fresh ParameterSet; deterministic in the seed.

    Bounds: w and leak conductances uniform in [0.01, 1], biases in
    [0.3, 0.8], slopes in [3, 8], reversal potentials +-1 equiprobable,
    membrane capacitance fixed at 1 (never trained), resting potential 0
    (trainable only with learnable_rest), readout uniform in [-0.1, 0.1]
    with zero bias.
    """
    rng = np.random.default_rng(seed)
    tables: Dict[str, Param] = {}
    for d in _table_defs(spec):
        kind = d.init[0]
        if kind == "uniform":
            value = rng.uniform(d.init[1], d.init[2], size=d.shape)
        elif kind == "pm_one":
            value = rng.integers(0, 2, size=d.shape).astype(np.float64) * 2.0 - 1.0
        else:
            value = np.full(d.shape, float(d.init[1]))
        tables[d.name] = Param(d.name, value, d.trainable, d.lower_bounded, d.counted)
    return ParameterSet(spec, tables, seed)


def clamp_params(params: ParameterSet) -> Tuple[ParameterSet, int]:
    """Project onto the feasible region: conductances, slopes, and C >= 0.

    Mutates in place; returns the set and how many entries were clamped.
    Idempotent. Biases, reversal potentials, leak conductances, and the
    linear maps are untouched.
    """
    clamped = 0
    for _, p in params.items():
        if not p.lower_bounded:
            continue
        mask = p.value < 0.0
        k = int(mask.sum())
        if k:
            p.value[mask] = 0.0
            clamped += k
    return params, clamped


def count_params(spec: ModelSpec) -> int:
    """Closed-form size of the recurrent layer's parameter block.

    Counts every recurrent-layer table including the fixed ones (C, e_l);
    excludes the readout (A_out, b_out) and the linear-input bias b_in.
    Per family, with n neurons and m inputs, synaptic wiring:

        act-rnn            3n^2 + n
        ltc (autonomous)   4n^2 + 3n
        ct-rnn + inputs    3n^2 + n  + (nm linear | 3nm synaptic-in)
        ltc + inputs       4n^2 + 3n + (nm linear | 4nm synaptic-in)

    and neural wiring:

        act-rnn            n^2 + 2n
        ct-rnn + inputs    n^2 + 3n + (nm linear | nm + 2m synaptic-in)

    The ode families count 3N^2 (synaptic) or N^2 + N (neural) on the
    augmented size N. learnable_rest adds n for the e_l vector where it is
    not already present.
    """
    n = spec.state_size
    m = spec.n_inputs
    sa = spec.wiring == "synaptic"

    if spec.family in ("neural-ode", "anode"):
        total = 3 * n * n if sa else n * n + n
    elif spec.family == "act-rnn":
        total = (3 * n * n + n) if sa else (n * n + 2 * n)
        if spec.learnable_rest:
            total += n
    elif spec.family == "ct-rnn":
        total = (3 * n * n + n) if sa else (n * n + 3 * n)
        if spec.learnable_rest:
            total += n
    else:  # ltc: adds e table, e_l, and C
        total = (4 * n * n + 3 * n) if sa else (n * n + 6 * n)

    if spec.input_mode == "linear":
        total += m * n
    elif spec.input_mode == "synaptic":
        if sa:
            total += (4 if spec.family == "ltc" else 3) * m * n
        else:
            total += m * n + 2 * m
    return total


# ---------------------------------------------------------------------------
# ANODE state helpers


def anode_wrap(x0, n_augment: int) -> np.ndarray:
    """Append n_augment zero coordinates: the augmented initial state."""
    if n_augment < 1:
        raise ValueError("n_augment must be >= 1")
    x0 = np.asarray(x0, dtype=np.float64)
    if x0.ndim <= 1:
        return np.concatenate([x0.reshape(-1), np.zeros(n_augment)])
    pad = np.zeros((x0.shape[0], n_augment))
    return np.concatenate([x0, pad], axis=1)


def anode_project(x_final, selector) -> np.ndarray:
    """Select designated coordinates from the augmented state."""
    x_final = np.asarray(x_final, dtype=np.float64)
    selector = list(selector)
    width = x_final.shape[-1]
    for idx in selector:
        if not 0 <= idx < width:
            raise ValueError(f"selector index {idx} out of range for state width {width}")
    return x_final[..., selector]


# ---------------------------------------------------------------------------
# selector matrices for the flattened per-synapse layout
#
# A (n_pre, n_post) table flattens row-major to K = n_pre*n_post columns with
# k = j*n_post + i.  Then for a batch X of states:
#   (X_pre @ J_pre)[:, k]  = x_j     (presynaptic value at every synapse)
#   (X_post @ J_post)[:, k] = x_i    (postsynaptic value at every synapse)
#   (Y @ K_post)[:, i]      = sum_j Y[:, j*n_post + i]   (current into i)

_SELECTOR_CACHE: Dict[Tuple[int, int], Tuple[np.ndarray, np.ndarray, np.ndarray]] = {}


def _selectors(n_pre: int, n_post: int):
    key = (n_pre, n_post)
    hit = _SELECTOR_CACHE.get(key)
    if hit is not None:
        return hit
    k = n_pre * n_post
    j_pre = np.zeros((n_pre, k))
    j_post = np.zeros((n_post, k))
    for j in range(n_pre):
        for i in range(n_post):
            col = j * n_post + i
            j_pre[j, col] = 1.0
            j_post[i, col] = 1.0
    out = (j_pre, j_post, j_post.T.copy())
    _SELECTOR_CACHE[key] = out
    return out


def _syn_static(mode: str, act, w, a, b, pre):
    """Ungated synapse value for a block of pre-activations.

    All four parameterizations multiply an activation by a conductance-like
    magnitude; ``plain`` is the historical variant with a outside and w
    inside the activation.
    """
    if mode == "plain":
        return ad.mul(a, act(ad.add(ad.mul(w, pre), b)))
    if mode == "r":
        return ad.mul(w, act(ad.add(pre, b)))
    if mode == "v":
        return ad.mul(w, act(ad.mul(a, ad.add(pre, b))))
    if mode == "affine":
        return ad.mul(w, act(ad.add(ad.mul(a, pre), b)))
    raise ValueError(f"unknown w_mode {mode!r}")


def _syn_vector(mode: str, act, a, b, pre):
    """Per-neuron activation for the neural-wiring path (w applied by matmul)."""
    if mode == "r":
        return act(ad.add(pre, b))
    if mode == "v":
        return act(ad.mul(a, ad.add(pre, b)))
    if mode == "affine":
        return act(ad.add(ad.mul(a, pre), b))
    raise ValueError(f"unknown w_mode {mode!r} for the vector path")


class BoundParams:
    """Parameter tensors bound onto one tape, with precomputed views.

    Construction happens once per forward/backward pass; every Euler
    sub-step then reuses these nodes. ``trainable`` lists the leaf tensors
    in table order for gradient collection.
    """

    def __init__(self, spec: ModelSpec, params: ParameterSet, for_grad: bool = True):
        params.validate_shapes()
        self.spec = spec
        self.act = ad.sigmoid if spec.activation == "sigmoid" else ad.tanh
        self.tensors: Dict[str, ad.Tensor] = {}
        self.trainable: List[Tuple[str, ad.Tensor]] = []
        for name, p in params.items():
            if for_grad and p.trainable:
                t = ad.leaf(p.value)
                self.trainable.append((name, t))
            else:
                t = ad.constant(p.value)
            self.tensors[name] = t

        n = spec.state_size
        mode = spec.effective_w_mode
        self.matrix_rec = spec.wiring == "synaptic" or mode == "plain"
        t = self.tensors

        if self.matrix_rec:
            jp, jq, kq = _selectors(n, n)
            self.rec_sel = (ad.constant(jp), ad.constant(jq), ad.constant(kq))
            k = n * n
            self.w_f = ad.reshape(t["w"], (1, k))
            if "a" in t:
                self.a_f = (
                    ad.reshape(t["a"], (1, k))
                    if spec.wiring == "synaptic"
                    else ad.matmul(t["a"], self.rec_sel[0])
                )
            else:
                self.a_f = None
            self.b_f = (
                ad.reshape(t["b"], (1, k))
                if spec.wiring == "synaptic"
                else ad.matmul(t["b"], self.rec_sel[0])
            )
            self.e_f = None
            if "e" in t:
                self.e_f = (
                    ad.reshape(t["e"], (1, k))
                    if spec.wiring == "synaptic"
                    else ad.matmul(t["e"], self.rec_sel[1])
                )
            self.ones_rec = ad.constant(np.ones((1, k)))
        else:
            self.w_mat = t["w"]
            self.a_row = t.get("a")
            self.b_row = t["b"]
            self.e_row = t.get("e")
            self.ones_row = ad.constant(np.ones((1, n)))
        if spec.wiring == "neural" and "e" in t:
            self.e_shared = t["e"]  # per-neuron reversal, shared with inputs
        else:
            self.e_shared = None

        self.w_l = t.get("w_l")
        self.e_l = t.get("e_l")
        self.inv_c = ad.constant(1.0 / params.value("C")) if "C" in t else None

        m = spec.n_inputs
        if spec.input_mode == "synaptic":
            self.matrix_in = spec.wiring == "synaptic" or mode == "plain"
            if self.matrix_in:
                jp, jq, kq = _selectors(m, n)
                self.in_sel = (ad.constant(jp), ad.constant(jq), ad.constant(kq))
                ki = m * n
                self.v_f = ad.reshape(t["v"], (1, ki))
                if spec.wiring == "synaptic":
                    self.a_u_f = ad.reshape(t["a_u"], (1, ki))
                    self.b_u_f = ad.reshape(t["b_u"], (1, ki))
                else:
                    self.a_u_f = ad.matmul(t["a_u"], self.in_sel[0])
                    self.b_u_f = ad.matmul(t["b_u"], self.in_sel[0])
                if "e_u" in t:
                    self.e_u_f = ad.reshape(t["e_u"], (1, ki))
                elif self.e_shared is not None:
                    self.e_u_f = ad.matmul(self.e_shared, self.in_sel[1])
                else:
                    self.e_u_f = None
                self.ones_in = ad.constant(np.ones((1, ki)))
            else:
                self.v_mat = t["v"]
                self.a_u_row = t["a_u"]
                self.b_u_row = t["b_u"]

    def trainable_tensors(self) -> List[ad.Tensor]:
        return [t for _, t in self.trainable]

    def grads_by_name(self, grads: List[np.ndarray]) -> Dict[str, np.ndarray]:
        return {name: g for (name, _), g in zip(self.trainable, grads)}


def bind_params(spec: ModelSpec, params: ParameterSet, for_grad: bool = True) -> BoundParams:
    """Attach a ParameterSet to a fresh tape."""
    return BoundParams(spec, params, for_grad=for_grad)


def _recurrent_term(spec: ModelSpec, bp: BoundParams, x: ad.Tensor) -> ad.Tensor:
    act = bp.act
    mode = spec.effective_w_mode
    if bp.matrix_rec:
        j_pre, j_post, k_post = bp.rec_sel
        pre = ad.matmul(x, j_pre)
        z = _syn_static(mode, act, bp.w_f, bp.a_f, bp.b_f, pre)
        if spec.gate == "reversal":
            z = ad.mul(z, ad.sub(bp.e_f, ad.matmul(x, j_post)))
        elif spec.gate == "one-minus":
            z = ad.mul(z, ad.sub(bp.ones_rec, ad.matmul(x, j_post)))
        return ad.matmul(z, k_post)
    s = _syn_vector(mode, act, bp.a_row, bp.b_row, x)
    r = ad.matmul(s, bp.w_mat)
    if spec.gate == "reversal":
        r = ad.mul(r, ad.sub(bp.e_row, x))
    elif spec.gate == "one-minus":
        r = ad.mul(r, ad.sub(bp.ones_row, x))
    return r


def input_stage(spec: ModelSpec, bp: BoundParams, u: ad.Tensor):
    """Precompute the input contribution's state-independent part.

    The returned token is consumed by :func:`input_apply` at every Euler
    sub-step. When the contribution does not depend on x at all (linear
    input, or ungated input synapses) the token already carries the final
    (B, n) matrix.
    """
    if spec.input_mode == "none":
        return None
    if spec.input_mode == "linear":
        direct = ad.add(ad.matmul(u, bp.tensors["A_in"]), bp.tensors["b_in"])
        return ("direct", direct)
    act = bp.act
    mode = spec.effective_w_mode
    if bp.matrix_in:
        j_pre, _, k_post = bp.in_sel
        pre = ad.matmul(u, j_pre)
        static = _syn_static(mode, act, bp.v_f, bp.a_u_f, bp.b_u_f, pre)
        if spec.gate == "none":
            return ("direct", ad.matmul(static, k_post))
        return ("gated-matrix", static)
    s = _syn_vector(mode, act, bp.a_u_row, bp.b_u_row, u)
    z = ad.matmul(s, bp.v_mat)
    if spec.gate == "none":
        return ("direct", z)
    return ("gated-vector", z)


def input_apply(spec: ModelSpec, bp: BoundParams, token, x: ad.Tensor) -> ad.Tensor:
    kind, val = token
    if kind == "direct":
        return val
    if kind == "gated-matrix":
        _, j_post, k_post = bp.in_sel
        xp = ad.matmul(x, j_post)
        gate = ad.sub(bp.e_u_f, xp) if spec.gate == "reversal" else ad.sub(bp.ones_in, xp)
        return ad.matmul(ad.mul(val, gate), k_post)
    gate = ad.sub(bp.e_row, x) if spec.gate == "reversal" else ad.sub(bp.ones_row, x)
    return ad.mul(val, gate)


def state_derivative(spec: ModelSpec, bp: BoundParams, x: ad.Tensor, input_token=None) -> ad.Tensor:
    """dx/dt for a batch of states x (B, state_size) on the current tape.

    Composition: recurrent synapse currents + input contribution - decay,
    all divided by the membrane capacitance for the ltc family. The decay is
    w_l*x, or w_l*(x - e_l) once a resting potential exists.
    """
    dx = _recurrent_term(spec, bp, x)
    if input_token is not None:
        dx = ad.add(dx, input_apply(spec, bp, input_token, x))
    if bp.w_l is not None:
        if bp.e_l is not None:
            dx = ad.add(dx, ad.mul(bp.w_l, ad.sub(bp.e_l, x)))
        else:
            dx = ad.sub(dx, ad.mul(bp.w_l, x))
    if bp.inv_c is not None:
        dx = ad.mul(dx, bp.inv_c)
    return dx


def output_tensor(spec: ModelSpec, bp: BoundParams, x: ad.Tensor) -> ad.Tensor:
    """Linear readout on the tape; anode states are projected first."""
    if spec.n_augment:
        n = spec.n_neurons
        k = spec.state_size
        proj = np.zeros((k, n))
        proj[:n, :n] = np.eye(n)
        x = ad.matmul(x, ad.constant(proj))
    return ad.add(ad.matmul(x, bp.tensors["A_out"]), bp.tensors["b_out"])


# ---------------------------------------------------------------------------
# plain-array entry points


def _check_vector(name: str, vec, length: int) -> np.ndarray:
    arr = np.asarray(vec, dtype=np.float64).reshape(-1)
    if arr.shape[0] != length:
        raise ValueError(f"{name} has length {arr.shape[0]}, expected {length}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains NaN or Inf")
    return arr


def derivative(
    spec: ModelSpec, params: ParameterSet, x, u=None
) -> np.ndarray:
    """State derivative at one state, as a plain length-n array.

    x must have length state_size (n_neurons plus any augmentation); u is
    required exactly when the spec has an input mode.
    """
    x = _check_vector("x", x, spec.state_size)
    if spec.input_mode == "none":
        if u is not None:
            raise ValueError("u supplied but spec has input_mode='none'")
        u_arr = None
    else:
        if u is None:
            raise ValueError(f"input_mode={spec.input_mode!r} requires u")
        u_arr = _check_vector("u", u, spec.n_inputs)

    bp = bind_params(spec, params, for_grad=False)
    xt = ad.constant(x.reshape(1, -1))
    token = input_stage(spec, bp, ad.constant(u_arr.reshape(1, -1))) if u_arr is not None else None
    return state_derivative(spec, bp, xt, token).value[0].copy()


def input_map(spec: ModelSpec, params: ParameterSet, u, x=None) -> np.ndarray:
    """Input contribution vector: A_in*u + b_in, or synapse currents from u.

    Gated input synapses (ltc, one-minus variants) need the postsynaptic
    state, so x is required there.
    """
    if spec.input_mode == "none":
        raise ValueError("spec has no input mode")
    u = _check_vector("u", u, spec.n_inputs)
    bp = bind_params(spec, params, for_grad=False)
    token = input_stage(spec, bp, ad.constant(u.reshape(1, -1)))
    if token[0] == "direct":
        return token[1].value[0].copy()
    if x is None:
        raise ValueError("gated input synapses need the state x")
    x = _check_vector("x", x, spec.state_size)
    return input_apply(spec, bp, token, ad.constant(x.reshape(1, -1))).value[0].copy()


def output_map(spec: ModelSpec, params: ParameterSet, x) -> np.ndarray:
    """Readout A_out*x + b_out (after projection for augmented states)."""
    x = _check_vector("x", x, spec.state_size)
    bp = bind_params(spec, params, for_grad=False)
    return output_tensor(spec, bp, ad.constant(x.reshape(1, -1))).value[0].copy()


# ---------------------------------------------------------------------------
# checkpoint serialization

_CHECKPOINT_FORMAT = "liquidnet-checkpoint"
_CHECKPOINT_VERSION = 1


def save_checkpoint(params: ParameterSet, path) -> None:
    """Write a JSON checkpoint: spec, seed, and every named table."""
    doc = {
        "format": _CHECKPOINT_FORMAT,
        "version": _CHECKPOINT_VERSION,
        "seed": params.seed,
        "spec": params.spec.to_dict(),
        "params": {
            name: {
                "shape": list(p.value.shape),
                "data": p.value.reshape(-1).tolist(),
                "trainable": p.trainable,
                "lower_bounded": p.lower_bounded,
                "counted": p.counted,
            }
            for name, p in params.items()
        },
    }
    Path(path).write_text(json.dumps(doc))


def load_checkpoint(path) -> ParameterSet:
    doc = json.loads(Path(path).read_text())
    if doc.get("format") != _CHECKPOINT_FORMAT:
        raise ValueError(f"{path}: not a checkpoint file (format={doc.get('format')!r})")
    if doc.get("version") != _CHECKPOINT_VERSION:
        raise ValueError(f"{path}: unsupported checkpoint version {doc.get('version')!r}")
    spec = ModelSpec.from_dict(doc["spec"])
    tables = {}
    for name, entry in doc["params"].items():
        value = np.array(entry["data"], dtype=np.float64).reshape(entry["shape"])
        tables[name] = Param(
            name, value, entry["trainable"], entry["lower_bounded"], entry["counted"]
        )
    ps = ParameterSet(spec, tables, doc.get("seed"))
    ps.validate_shapes()
    return ps
