"""Run the numeric verifiers and show their margins.

Three executable identities back the engine:
  1. pre- and post-activation forms of the same flow track each other
     exactly under the shared Euler discretization (a linear change of
     variables commutes with the solver);
  2. freezing each synapse's conductance at the current state reads the
     reversal-gated cell as one affine map per neuron, which must agree
     with the full derivative at the expansion point;
  3. with all synapses silent, the leak contracts the state to rest
     monotonically whenever dt * w_l stays below the capacitance.
"""

import numpy as np

from liquidnet import (
    ModelSpec,
    derivative,
    equivalence_suite,
    init_params,
    linearize_at,
    linearization_suite,
    stability_check,
)

eq = equivalence_suite(n_instances=100, steps=100, seed=0)
print(f"change-of-variables equivalence, 100 instances x 100 steps:")
print(f"  worst deviation, no-leak form:   {eq['max_deviation_form_1']:.3e}")
print(f"  worst deviation, leaky form:     {eq['max_deviation_form_2']:.3e}")
print(f"  threshold {eq['threshold']:.0e}: {'pass' if eq['passed'] else 'FAIL'}")

lin = linearization_suite(n_trials=1000, seed=0)
print(f"\naffine readback vs full derivative, 1000 random gated cells:")
print(f"  worst relative error {lin['max_relative_error']:.3e} "
      f"(threshold {lin['threshold']:.0e}): {'pass' if lin['passed'] else 'FAIL'}")

spec = ModelSpec(family="ltc", wiring="synaptic", activation="sigmoid", n_neurons=3)
params = init_params(spec, seed=5)
x = np.array([0.3, -0.2, 0.5])
view = linearize_at(spec, params, x)
print("\none cell, written as dx_i = slope_i * x_i + intercept_i at x = "
      f"[{', '.join(f'{v:+.2f}' for v in x)}]:")
for i in range(3):
    print(f"  neuron {i}: slope {view.slope[i]:+.4f}  intercept {view.intercept[i]:+.4f}  "
          f"effective time constant {-1.0 / view.slope[i]:.3f}")
print(f"  reconstruction against derivative(): "
      f"{np.abs(view.reconstruction() - derivative(spec, params, x)).max():.2e}")

stab = stability_check(n_draws=1000, seed=0)
print(f"\nleak-only contraction, 1000 random draws with dt * w_l < C:")
print(f"  violations {stab.violations}, tightest step ratio {stab.max_contraction_ratio:.6f} "
      f"(< 1 means every step moved closer to rest): {'pass' if stab.passed else 'FAIL'}")
