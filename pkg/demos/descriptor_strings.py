"""The compact descriptor grammar, end to end.

A descriptor is one token naming a whole model variant:

    ctrnn_[w-mode]{sigm|tanh}[*|+][s]_{linear|synaptic}[_lis]

w-mode picks where the learned weight sits relative to the activation,
* keeps the (1 - x) factor, + switches on reversal gating (the liquid
time-constant cell), s makes the recurrence per-synapse, the input word
picks the input map, and _lis makes resting potentials trainable.
"""

from itertools import product

from liquidnet import count_params, parse, render, to_model_spec
from liquidnet.descriptor import Descriptor

for s in ("ctrnn_vtanh_linear", "ctrnn_vsigm+s_synaptic", "ctrnn_sigm*_linear_lis"):
    d = parse(s)
    spec = to_model_spec(d, n_neurons=32, n_inputs=32)
    print(f"{s}")
    print(f"  -> w_mode={d.w_mode} act={d.act} factor={d.factor} rec={d.rec_type} "
          f"in={d.in_mode} lis={d.lis}")
    print(f"  -> family {spec.family}, wiring {spec.wiring}, gate {spec.gate}; "
          f"n=32 m=32 carries {count_params(spec)} parameters")

print("\nBad strings fail with the position in hand:")
for s in ("ctrnn_xsigm_linear", "ctrnn_vsigm+s_synaptic_junk"):
    try:
        parse(s)
    except ValueError as err:
        print(f"  {err}")

combos = [
    Descriptor(w, a, f, r, i, l)
    for w, a, f, r, i, l in product(
        ("plain", "r", "v"), ("sigm", "tanh"), ("none", "star", "plus"),
        ("neuronal", "synaptic"), ("linear", "synaptic"), (False, True),
    )
]
rendered = [render(d) for d in combos]
assert len(set(rendered)) == len(combos)
assert all(parse(s) == d for s, d in zip(rendered, combos))
print(f"\nall {len(combos)} grammar combinations render to distinct strings "
      f"and parse back to themselves")
print("first few:", ", ".join(rendered[:5]), "...")
