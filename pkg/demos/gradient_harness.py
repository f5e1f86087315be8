"""The reverse-mode tape, and the finite-difference harness that audits it.

First differentiates a tiny expression by hand-checkable rules, then lets
the harness compare a full 20-step rollout loss gradient against central
finite differences for every family/wiring/input-mode combination the
engine accepts.
"""

import numpy as np

from liquidnet import autodiff as ad
from liquidnet import gradient
from liquidnet.analysis import family_combinations, gradient_check

w = ad.leaf(np.array([[0.5, -1.0]]))
x = ad.constant(np.array([[2.0, 3.0]]))
loss = ad.tsum(ad.mul(ad.sigmoid(ad.mul(w, x)), x))
grads = gradient(loss, [w])
s = 1.0 / (1.0 + np.exp(-np.array([1.0, -3.0])))
by_hand = np.array([2.0, 3.0]) ** 2 * s * (1.0 - s)
print("d/dw sum(x * sigmoid(w x)):")
print(f"  tape     {grads[0].ravel().round(8)}")
print(f"  by hand  {by_hand.round(8)}")

print("\n20-step rollout loss vs central differences, every combination:")
for spec in family_combinations(n_neurons=3, n_inputs=2):
    r = gradient_check(spec, steps=20, seed=0)
    status = "ok" if r.passed else "FAIL"
    print(f"  {r.label:32s} rel err {r.rel_error:.2e}  {status}")
