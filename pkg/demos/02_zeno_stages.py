"""How many inner stages does blocking need before D1 fires reliably?

Each blocked stage absorbs a little of the right-half amplitude, so the D1
probability is P cos^(2M)(pi / 2M), approaching P only slowly.
"""

from counterfactual.protocol import ProtocolParams, raw_probabilities, zeno_survival

P = 1.0
print(f"{'M':>5} {'D1 (simulated)':>16} {'closed form':>12} {'absorbed':>10}")
for m in (1, 2, 4, 8, 16, 64, 256):
    d = raw_probabilities(ProtocolParams(P, m, True))
    print(f"{m:5d} {d.d1:16.6f} {zeno_survival(P, m):12.6f} {d.lost:10.6f}")
