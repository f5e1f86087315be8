"""Compact string descriptors for input-driven model variants.

Grammar, tokenized left to right with no backtracking:

    ctrnn_[r|v]{sigm|tanh}[*|+][s]_{linear|synaptic}[_lis]

* optional w-mode char: ``r`` or ``v``; absent means the plain form
* activation word: ``sigm`` or ``tanh``
* optional gating factor: ``*`` multiplies synapse currents by (1 - x_post),
  ``+`` by the reversal driving force (e - x_post), which selects the ltc
  family; absent means no gate
* optional ``s``: per-synapse activation tables instead of per-neuron
* input mode word: ``linear`` or ``synaptic``
* optional ``_lis``: learnable resting state

Examples: ``ctrnn_vtanh_linear`` is the plain continuous-time RNN with a
linear input map; ``ctrnn_vsigm+s_synaptic`` is the fully synaptic
liquid-time-constant model.
"""

from __future__ import annotations

from dataclasses import dataclass

from .models import ModelSpec

__all__ = ["Descriptor", "parse", "render", "to_model_spec"]

_W_MODES = ("plain", "r", "v")
_ACTS = ("sigm", "tanh")
_FACTORS = ("none", "star", "plus")
_REC_TYPES = ("neuronal", "synaptic")
_IN_MODES = ("linear", "synaptic")

_FACTOR_CHAR = {"none": "", "star": "*", "plus": "+"}
_FACTOR_GATE = {"none": "none", "star": "one-minus", "plus": "reversal"}


@dataclass(frozen=True)
class Descriptor:
    """Parsed form of one descriptor string."""

    w_mode: str = "plain"
    act: str = "sigm"
    factor: str = "none"
    rec_type: str = "neuronal"
    in_mode: str = "linear"
    lis: bool = False

    def validate(self) -> None:
        if self.w_mode not in _W_MODES:
            raise ValueError(f"descriptor w_mode {self.w_mode!r} not in {_W_MODES}")
        if self.act not in _ACTS:
            raise ValueError(f"descriptor act {self.act!r} not in {_ACTS}")
        if self.factor not in _FACTORS:
            raise ValueError(f"descriptor factor {self.factor!r} not in {_FACTORS}")
        if self.rec_type not in _REC_TYPES:
            raise ValueError(f"descriptor rec_type {self.rec_type!r} not in {_REC_TYPES}")
        if self.in_mode not in _IN_MODES:
            raise ValueError(f"descriptor in_mode {self.in_mode!r} not in {_IN_MODES}")


def parse(s: str) -> Descriptor:
    """Parse a descriptor string; errors carry the failing position and text."""
    if not isinstance(s, str):
        raise ValueError(f"descriptor must be a string, got {type(s).__name__}")

    pos = 0

    def fail(expected: str):
        found = s[pos : pos + 10] if pos < len(s) else "end of string"
        raise ValueError(
            f"descriptor parse error in {s!r} at position {pos}: "
            f"expected {expected}, found {found!r}"
        )

    if not s.startswith("ctrnn_"):
        fail("prefix 'ctrnn_'")
    pos = 6

    w_mode = "plain"
    if s[pos : pos + 1] in ("r", "v"):
        w_mode = s[pos]
        pos += 1

    if s.startswith("sigm", pos):
        act = "sigm"
        pos += 4
    elif s.startswith("tanh", pos):
        act = "tanh"
        pos += 4
    else:
        fail("activation 'sigm' or 'tanh'")

    factor = "none"
    if s[pos : pos + 1] == "*":
        factor = "star"
        pos += 1
    elif s[pos : pos + 1] == "+":
        factor = "plus"
        pos += 1

    rec_type = "neuronal"
    if s[pos : pos + 1] == "s":
        rec_type = "synaptic"
        pos += 1

    if s[pos : pos + 1] != "_":
        fail("'_' before the input mode")
    pos += 1

    if s.startswith("linear", pos):
        in_mode = "linear"
        pos += 6
    elif s.startswith("synaptic", pos):
        in_mode = "synaptic"
        pos += 8
    else:
        fail("input mode 'linear' or 'synaptic'")

    lis = False
    if s.startswith("_lis", pos):
        lis = True
        pos += 4

    if pos != len(s):
        fail("end of string")
    return Descriptor(w_mode, act, factor, rec_type, in_mode, lis)


def render(d: Descriptor) -> str:
    """Canonical string for a Descriptor; parse(render(d)) == d."""
    d.validate()
    return (
        "ctrnn_"
        + ("" if d.w_mode == "plain" else d.w_mode)
        + d.act
        + _FACTOR_CHAR[d.factor]
        + ("s" if d.rec_type == "synaptic" else "")
        + "_"
        + d.in_mode
        + ("_lis" if d.lis else "")
    )


def to_model_spec(
    d: Descriptor,
    n_neurons: int,
    n_inputs: int,
    n_outputs: int = 1,
    dt: float = 0.1,
    unfolds: int = 10,
) -> ModelSpec:
    """Build the ModelSpec a descriptor denotes.

    The ``+`` factor selects the ltc family; ``*`` keeps the ct-rnn family
    with the (1 - x) gate. Combinations the model validation rejects
    (e.g. tanh under reversal gating) raise here.
    """
    d.validate()
    return ModelSpec(
        family="ltc" if d.factor == "plus" else "ct-rnn",
        n_neurons=n_neurons,
        activation={"sigm": "sigmoid", "tanh": "tanh"}[d.act],
        wiring={"neuronal": "neural", "synaptic": "synaptic"}[d.rec_type],
        input_mode=d.in_mode,
        n_inputs=n_inputs,
        n_outputs=n_outputs,
        w_mode=d.w_mode,
        gate=_FACTOR_GATE[d.factor],
        learnable_rest=d.lis,
        dt=dt,
        unfolds=unfolds,
    )
