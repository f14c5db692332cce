"""Raw and post-selected detector statistics, closed form versus sampling.

    python demos/01_detection_tables.py
"""

from counterfactual.montecarlo import empirical_tables, make_rng
from counterfactual.protocol import ProtocolParams, postselected_summary, raw_probabilities_limit

P = 2 / 3

print(f"Left/right split P = {P:.4f}\n")
print("Raw detector probabilities (infinite-stage limit)")
for col, blocking in (("blocking", True), ("open", False)):
    d = raw_probabilities_limit(P, blocking)
    print(f"  {col:9s} D0={d.d0:.4f}  D1={d.d1:.4f}  D3={d.d3:.4f}")

s = postselected_summary(P)
print("\nAfter discarding D3 clicks, with Bob's kept bits balanced")
for (det, col), v in s.table2.items():
    print(f"  P({det}, {col:2s}) = {v:.4f}")
print(f"  correct-bit probability  {s.p_c:.4f}")
print(f"  D0 accuracy              {s.acc_d0:.4f}")
print(f"  fraction of rounds kept  {s.postselect_prob:.4f}")

emp = empirical_tables(ProtocolParams(P, None), 100_000, make_rng(7))
print("\nSampled with 100000 rounds per column (95% Wilson intervals)")
print(f"  correct-bit probability  {emp.p_c.value:.4f}  [{emp.p_c.low:.4f}, {emp.p_c.high:.4f}]")
