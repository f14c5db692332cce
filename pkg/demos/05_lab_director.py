"""The lab director's game: keep pairing labs until one pair gets a 10-bit
message through without a single lost round.

Each round is lost with probability 1/2 at P = 2/3, so the expected number of
pairs is 2^10.
"""

from counterfactual.montecarlo import lab_director_runs, make_rng
from counterfactual.protocol import ProtocolParams

res = lab_director_runs(ProtocolParams(2 / 3, None), 10, 1000, make_rng(1))
print(f"mean pairs over {res['reps']} games: {res['mean_pairs']:.1f} (expected {res['expected_pairs']:.0f})")
print(f"mean accuracy of the winning pair:  {res['mean_accuracy']:.3f}")
