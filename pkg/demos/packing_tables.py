"""Parameter-packing arithmetic: how many parameters a budget buys.

Per-synapse wiring spends a table per synapse (counts grow with n^2 terms
per table); per-neuron wiring shares activation parameters across each
neuron's outgoing synapses. The report below sizes both, then finds, for
every per-synapse row, the smallest per-neuron network whose count
reaches it.
"""

from liquidnet import count_params, packing_report, reference_counts
from liquidnet.analysis import documented_packing_pairings

print("Reference points (exact):")
for label, spec, expected in reference_counts():
    got = count_params(spec)
    mark = "ok" if got == expected else "MISMATCH"
    print(f"  {label:42s} {got:6d} (expected {expected}) {mark}")

report = packing_report(n_values=(16, 32, 64), m=32)
print()
print(report.to_markdown())

print("\nThe five documented budget correspondences, recomputed:")
for p in documented_packing_pairings():
    flag = "consistent" if p.quoted_count_consistent else "INCONSISTENT"
    reach = "reaches" if p.quoted_size_reaches_sa else "does not reach"
    print(
        f"  {p.label}: per-synapse {p.sa_count}; quoted twin n={p.quoted_na_size} "
        f"-> {p.quoted_na_count} ({flag}, {reach} the budget); smallest twin that "
        f"reaches it: n={p.smallest_matching_na_size} ({p.smallest_matching_na_count})"
    )
