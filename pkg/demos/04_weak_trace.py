"""Mirror-dither experiment: which mirrors leave a trace at D0?

Alice's mirror wobbles at 30 Hz, Bob's two mirrors at 40 and 50 Hz. The beam
centroid at each detector is recorded with pointer noise and Fourier analysed.
"""

import numpy as np

from counterfactual.histories import Projector
from counterfactual.montecarlo import make_rng
from counterfactual.protocol import ProtocolParams, build_circuit
from counterfactual.weakmeas import (
    default_dithers, detect_peaks, off_probe_median, simulate_dither, spectrum, weak_value,
)

circuit = build_circuit(ProtocolParams(2 / 3, 2, blocking=False))
d0 = Projector(4, ("F",), "H")
for k in (1, 2, 3):
    a = weak_value(Projector(k, ("A",)), circuit, d0).real
    b = weak_value(Projector(k, ("B",)), circuit, d0).real
    print(f"t{k}: weak value on A = {a:+.3f}, on Bob's arm = {b:+.3f}")

series = simulate_dither(circuit, default_dithers(), rng=make_rng(0, 1))
for det in ("D0", "D3"):
    spec = spectrum(series[det])
    med = off_probe_median(spec, [30, 40, 50])
    ratios = ", ".join(f"{f} Hz {spec.power_at(f) / med:9.1f}x" for f in (30, 40, 50))
    print(f"{det}: {ratios}  -> {detect_peaks(spec, [30, 40, 50])}")

print(f"D0 centroid rms: {np.std(series['D0'].samples):.4f} mm")
