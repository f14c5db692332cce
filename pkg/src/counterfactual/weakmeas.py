"""
Weak measurements at the interferometer mirrors.

Two complementary views:

* ``weak_value`` -- the two-state ratio <phi|Pi|psi> / <phi|psi> at a time
  slice, with |psi> evolved forward from the source and <phi| evolved
  backward from the post-selection.
* ``simulate_dither`` -- a pointer model.  Each named mirror shifts the
  transverse position of whatever passes it by delta * sin(2 pi f t).
  The light reaching a detector is a coherent sum of Gaussian beams, one
  per set of mirrors visited, and its centroid is computed from exact
  Gaussian overlap integrals, so no linearisation is involved.

``spectrum`` and ``detect_peaks`` turn centroid records into power
spectra and presence/absence calls at probe frequencies.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .exceptions import ConfigurationError, UsageError, WeakValueUndefinedError
from .histories import Projector
from .montecarlo import make_rng
from .optics import DETECTOR_ARMS, CircuitModel, Mirror

#: Laser wavelength of the tabletop version, in nm.  Not used by the pointer model.
WAVELENGTH_NM = 630.0
DEFAULT_FREQS = {"M_A": 30.0, "M_B1": 40.0, "M_B2": 50.0}
DEFAULT_AMPLITUDE_MM = 0.01
DEFAULT_BEAM_DIAMETER_MM = 5.0
DEFAULT_RATE_HZ = 1000.0
DEFAULT_DURATION_S = 2.0
DEFAULT_NOISE_RMS_MM = 0.001
WEAKNESS_RATIO = 0.05

_ARM_OF_DETECTOR = {det: arm for arm, det in DETECTOR_ARMS.items()}


@dataclass(frozen=True)
class DitherSpec:
    mirror: str
    frequency: float
    amplitude: float

    def __post_init__(self):
        if not self.frequency > 0:
            raise ConfigurationError(f"dither frequency must be > 0, got {self.frequency}")
        if not self.amplitude >= 0:
            raise ConfigurationError(f"dither amplitude must be >= 0, got {self.amplitude}")


@dataclass(frozen=True)
class BeamModel:
    """Gaussian beam with 1/e^2 intensity diameter ``diameter`` (mm)."""

    diameter: float = DEFAULT_BEAM_DIAMETER_MM

    def __post_init__(self):
        if not self.diameter > 0:
            raise ConfigurationError(f"beam diameter must be > 0, got {self.diameter}")

    @property
    def sigma(self) -> float:
        # intensity exp(-2x^2/w^2) with w = d/2 has standard deviation w/2
        return self.diameter / 4.0


@dataclass(frozen=True)
class TimeSeries:
    rate: float
    samples: np.ndarray

    @property
    def duration(self) -> float:
        return len(self.samples) / self.rate

    @property
    def t(self) -> np.ndarray:
        return np.arange(len(self.samples)) / self.rate


@dataclass(frozen=True)
class Spectrum:
    freqs: np.ndarray
    power: np.ndarray
    n_samples: int

    @property
    def spacing(self) -> float:
        return float(self.freqs[1] - self.freqs[0]) if len(self.freqs) > 1 else math.inf

    def energy(self) -> float:
        """Sum of squared samples recovered from the one-sided power."""
        w = np.full(len(self.power), 2.0)
        w[0] = 1.0
        if self.n_samples % 2 == 0:
            w[-1] = 1.0
        return float(np.sum(w * self.power) / self.n_samples)

    def power_at(self, freq: float) -> float:
        return float(self.power[self._bin(freq)])

    def _bin(self, freq: float) -> int:
        k = freq / self.spacing
        if abs(k - round(k)) > 1e-9 or not 0 <= round(k) < len(self.freqs):
            raise UsageError(
                f"{freq} Hz is not on the frequency grid (spacing {self.spacing} Hz); "
                "choose a duration that makes it an integer multiple of 1/duration")
        return int(round(k))


# ----------------------------------------------------------- weak values


def _final_bra(circuit: CircuitModel, final: Projector) -> np.ndarray:
    psi_n = circuit.states()[-1].vector
    return final.matrix(circuit.space) @ psi_n


def weak_value(projector: Projector, circuit: CircuitModel, final: Projector) -> complex:
    """Weak value of ``projector`` for the source state post-selected on ``final``.

    For a rank-one ``final`` this is the textbook two-state expression; for
    larger subspaces the backward state is the post-selected part of the
    forward-evolved state.
    """
    n = circuit.n_slices - 1
    if final.slice != n:
        raise UsageError(f"post-selection must sit at the last slice {n}")
    k = projector.slice
    if not 0 <= k <= n:
        raise UsageError(f"slice {k} outside 0..{n}")
    psi = circuit.states()[k].vector
    phi = circuit.evolution(k, n).conj().T @ _final_bra(circuit, final)
    overlap = np.vdot(phi, psi)
    if abs(overlap) < 1e-14:
        raise WeakValueUndefinedError("post-selected state has zero overlap with the forward state")
    return complex(np.vdot(phi, projector.matrix(circuit.space) @ psi) / overlap)


# ----------------------------------------------------------- pointer model


def path_components(circuit: CircuitModel) -> dict[frozenset, np.ndarray]:
    """Final amplitude vectors split by the set of named mirrors each path visited."""
    space = circuit.space
    comps = {frozenset(): circuit.initial_state().vector}
    for stage in circuit.stages:
        for el in stage.elements:
            if isinstance(el, Mirror):
                i = space.index(el.mode, 0)
                new = {}
                for key, vec in comps.items():
                    hit = np.zeros_like(vec)
                    hit[i:i + 2] = vec[i:i + 2]
                    rest = vec - hit
                    for k, v in ((key, rest), (key | {el.name}, el.act(space, hit))):
                        new[k] = new.get(k, 0) + v
                comps = {k: v for k, v in new.items() if np.any(v != 0)}
            else:
                comps = {k: el.act(space, v) for k, v in comps.items()}
    return comps


def _centroid(amps: np.ndarray, shifts: np.ndarray, sigma: float) -> np.ndarray:
    """Intensity centroid of sum_p amps[p, pol] * g(x - shifts[p, t]).

    ``amps`` has shape (paths, 2); ``shifts`` (paths, times).  Uses
    int g(x-a) g(x-b) dx = exp(-(a-b)^2 / 8 sigma^2) and
    int x g(x-a) g(x-b) dx = (a+b)/2 times the same factor.
    """
    coh = (amps @ amps.conj().T).real                       # sums the two polarizations
    diff = shifts[:, None, :] - shifts[None, :, :]
    mid = 0.5 * (shifts[:, None, :] + shifts[None, :, :])
    overlap = np.exp(-diff ** 2 / (8.0 * sigma ** 2)) * coh[:, :, None]
    norm = overlap.sum(axis=(0, 1))
    first = (overlap * mid).sum(axis=(0, 1))
    out = np.zeros_like(norm)
    lit = norm > 1e-24
    out[lit] = first[lit] / norm[lit]
    return out


def centroids(circuit: CircuitModel, displacements: dict[str, np.ndarray],
              beam: BeamModel = BeamModel(), detectors=("D0", "D1", "D3")) -> dict[str, np.ndarray]:
    """Detector centroids for given per-mirror displacement records (mm)."""
    comps = path_components(circuit)
    keys = list(comps)
    n_t = len(next(iter(displacements.values()))) if displacements else 1
    shifts = np.zeros((len(keys), n_t))
    for j, key in enumerate(keys):
        for mirror in key:
            if mirror in displacements:
                shifts[j] += displacements[mirror]
    out = {}
    for det in detectors:
        i = circuit.space.index(_ARM_OF_DETECTOR[det], 0)
        amps = np.array([comps[k][i:i + 2] for k in keys])
        out[det] = _centroid(amps, shifts, beam.sigma)
    return out


def default_dithers(amp_a=DEFAULT_AMPLITUDE_MM, amp_b1=DEFAULT_AMPLITUDE_MM,
                    amp_b2=DEFAULT_AMPLITUDE_MM) -> list[DitherSpec]:
    amps = {"M_A": amp_a, "M_B1": amp_b1, "M_B2": amp_b2}
    return [DitherSpec(m, f, amps[m]) for m, f in DEFAULT_FREQS.items()]


def simulate_dither(circuit: CircuitModel, dithers, beam: BeamModel = BeamModel(),
                    rate: float = DEFAULT_RATE_HZ, duration: float = DEFAULT_DURATION_S,
                    noise_rms: float = DEFAULT_NOISE_RMS_MM,
                    rng: np.random.Generator | None = None) -> dict[str, TimeSeries]:
    """Centroid time series at every detector while the mirrors oscillate."""
    dithers = list(dithers)
    n = rate * duration
    if abs(n - round(n)) > 1e-9 or round(n) < 1:
        raise ConfigurationError(f"rate x duration = {n} is not a positive integer")
    n = int(round(n))
    fmax = max((d.frequency for d in dithers), default=0.0)
    if not rate > 2 * fmax:
        raise ConfigurationError(f"sample rate {rate} Hz aliases a {fmax} Hz dither")
    if noise_rms < 0:
        raise ConfigurationError("noise RMS must be >= 0")
    known = circuit.mirrors()
    t = np.arange(n) / rate
    disp = {}
    for d in dithers:
        if d.mirror not in known:
            raise ConfigurationError(f"circuit has no mirror {d.mirror!r}")
        if d.amplitude / beam.diameter > WEAKNESS_RATIO:
            warnings.warn(f"{d.mirror}: amplitude/diameter = {d.amplitude / beam.diameter:.3g} "
                          "is not a weak disturbance", RuntimeWarning, stacklevel=2)
        disp[d.mirror] = disp.get(d.mirror, 0.0) + d.amplitude * np.sin(2 * np.pi * d.frequency * t)
    if not disp:
        disp = {"": np.zeros(n)}
    cents = centroids(circuit, disp, beam)
    if noise_rms > 0:
        rng = make_rng(0, 1) if rng is None else rng
        cents = {det: c + rng.normal(0.0, noise_rms, n) for det, c in cents.items()}
    return {det: TimeSeries(rate, c) for det, c in cents.items()}


# ----------------------------------------------------------- spectra


def spectrum(series: TimeSeries) -> Spectrum:
    """One-sided DFT power |X_k|^2 of the centroid record."""
    x = np.asarray(series.samples, dtype=float)
    if x.size == 0:
        raise UsageError("empty time series")
    X = np.fft.rfft(x)
    return Spectrum(np.fft.rfftfreq(x.size, 1.0 / series.rate), np.abs(X) ** 2, x.size)


def off_probe_median(spec: Spectrum, probe_freqs) -> float:
    mask = np.ones(len(spec.power), dtype=bool)
    mask[0] = False
    for f in probe_freqs:
        mask[spec._bin(f)] = False
    return float(np.median(spec.power[mask]))


def detect_peaks(spec: Spectrum, probe_freqs, threshold_ratio: float = 10.0) -> dict[float, bool]:
    """Flag a probe present when its bin exceeds ``threshold_ratio`` x the median
    power of the other non-DC bins."""
    probe_freqs = list(probe_freqs)
    if not probe_freqs:
        return {}
    bins = [spec._bin(f) for f in probe_freqs]
    floor = off_probe_median(spec, probe_freqs)
    return {f: bool(spec.power[b] > threshold_ratio * floor) for f, b in zip(probe_freqs, bins)}


# ----------------------------------------------------------- sensitivity


@dataclass(frozen=True)
class Sensitivity:
    first: float
    second: float


def bob_sensitivity(circuit: CircuitModel, mirror: str = "M_B1", kind: str = "phase",
                    detector: str = "D0", step: float = 1e-6,
                    beam: BeamModel = BeamModel()) -> Sensitivity:
    """Finite-difference response of a detector to a small disturbance at ``mirror``.

    ``kind`` is ``"phase"`` or ``"tilt"`` (acting on the photon amplitude
    reaching ``detector``) or ``"displacement"`` (acting on its centroid).
    Returns magnitudes of the central first and second differences.
    """
    if detector not in _ARM_OF_DETECTOR:
        raise UsageError(f"unknown detector {detector!r}")
    if mirror not in circuit.mirrors():
        raise ConfigurationError(f"circuit has no mirror {mirror!r}")
    i = circuit.space.index(_ARM_OF_DETECTOR[detector], 0)

    if kind in ("phase", "tilt"):
        def f(eps):
            c = circuit.replace_mirror(mirror, **{kind: eps})
            return c.states()[-1].vector[i:i + 2]
    elif kind == "displacement":
        def f(eps):
            return centroids(circuit, {mirror: np.array([eps])}, beam, (detector,))[detector]
    else:
        raise UsageError(f"unknown perturbation kind {kind!r}")

    lo, mid, hi = f(-step), f(0.0), f(step)
    first = np.linalg.norm((hi - lo) / (2 * step))
    second = np.linalg.norm((hi - 2 * mid + lo) / step ** 2)
    return Sensitivity(float(first), float(second))
