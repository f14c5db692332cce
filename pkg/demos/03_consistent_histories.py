"""Which path did the photon take, given that D0 clicked and Bob left his channel open?

Builds the 18 coarse-grained histories for the two-stage circuit, checks that
they decohere and prints the ones with nonzero weight.
"""

import numpy as np

from counterfactual.histories import check_consistency, family_y, history_probabilities
from counterfactual.protocol import ProtocolParams, build_circuit

circuit = build_circuit(ProtocolParams(2 / 3, 2, blocking=False))
family = family_y(circuit)
consistent, gram = check_consistency(family, circuit)
off = np.abs(gram - np.diag(np.diag(gram))).max()
print(f"{len(family)} histories, largest off-diagonal Gram entry {off:.1e}, consistent: {consistent}")

for history, prob in history_probabilities(family, circuit).items():
    if prob > 0:
        print(f"  {history.label}   probability {prob:.3f}")
