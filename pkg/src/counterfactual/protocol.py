"""
Chained polarizing interferometer for a single photon.

Layout of the circuit for ``M`` inner stages (time slices t0 ... t_{M+2})::

    t0 -> t1   rotator on S (sin^2 = P), PBS: S,H -> A   S,V -> D
    t1 -> t2   rotator pi/(2M) on D, PBS: D,H -> B (Bob's channel)  D,V -> C
    t_k -> t_{k+1}  (k = 2 .. M)
               Bob's station on B (mirror M_B{k-1}, or blocker -> SinkBob{k-1}),
               PBS recombines B,H and C,V into D (B,V and C,H leave by its
               second port, Exit{k}), rotator, PBS splits again
    t_{M+1} -> t_{M+2}
               Bob's station M_B{M}, recombine into D (exit Exit{M+1}), mirror M_A on A,
               output PBSs: A -> F (D0), D,V -> G (D1), D,H -> J (D3)

With Bob not blocking, the M rotations add up to pi/2 and V on the right
half becomes H, ending in J.  With Bob blocking, each stage's H part is
absorbed and what survives stays V, ending in G with probability
P cos^{2M}(pi/(2M)).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .exceptions import ConfigurationError
from .optics import (
    H, V, Blocker, CircuitModel, Mirror, ModeSpace, Rotator, Routing, Stage,
    detect_probabilities, propagate,
)


@dataclass(frozen=True)
class ProtocolParams:
    """``p``: probability of entering the right half; ``m``: inner stages
    (``None`` for the infinite-stage limit); ``blocking``: Bob's bit is 0."""

    p: float
    m: int | None = 2
    blocking: bool = False

    def __post_init__(self):
        check_probability(self.p)
        if self.m is not None:
            if isinstance(self.m, bool) or int(self.m) != self.m or self.m < 1:
                raise ConfigurationError(f"M must be an integer >= 1, got {self.m!r}")
            object.__setattr__(self, "m", int(self.m))
        object.__setattr__(self, "p", float(self.p))
        object.__setattr__(self, "blocking", bool(self.blocking))

    def with_blocking(self, blocking: bool) -> ProtocolParams:
        return ProtocolParams(self.p, self.m, blocking)


def check_probability(p) -> None:
    if not isinstance(p, (int, float, np.floating)) or not (0.0 <= p <= 1.0):
        raise ConfigurationError(f"P must lie in [0, 1], got {p!r}")


@dataclass(frozen=True)
class DetectionDistribution:
    d0: float
    d1: float
    d3: float
    lost: float = 0.0
    conditioning: str = "raw"

    @property
    def loss(self) -> float:
        """Everything that is not a D0/D1 click."""
        return self.d3 + self.lost

    def as_dict(self) -> dict[str, float]:
        return {"D0": self.d0, "D1": self.d1, "D3": self.d3, "lost": self.lost}

    def total(self) -> float:
        return self.d0 + self.d1 + self.d3 + self.lost


@dataclass(frozen=True)
class PostselectionSummary:
    p: float
    n: float
    p_b_raw: float
    table2: dict
    p_l: float
    p_c: float
    acc_d0: float
    degenerate: bool = False

    @property
    def postselect_prob(self) -> float:
        return 1.0 - self.p_l


def inner_arms(m: int) -> tuple[tuple[str, ...], ...]:
    return (("S",), ("A", "D")) + (("A", "B", "C"),) * m + (("F", "G", "J"),)


def build_circuit(params: ProtocolParams, rotator_sign: int = 1) -> CircuitModel:
    """Assemble the stage list for ``params``.

    ``rotator_sign`` flips the rotation convention of every rotator; used
    to check that conclusions do not depend on it.
    """
    if params.m is None:
        raise ConfigurationError("build_circuit needs a finite number of inner stages")
    m = params.m
    sinks = tuple(f"SinkBob{k}" for k in range(1, m + 1))
    # the recombining PBS of stage k sends B,V and C,H out of its second port
    ports = tuple(f"Exit{k}" for k in range(2, m + 2))
    space = ModeSpace(("S", "A", "D", "B", "C", "F", "G", "J") + sinks + ports,
                      frozenset(sinks + ports))

    alpha = math.asin(math.sqrt(params.p))
    theta = math.pi / (2 * m)
    split = Routing.from_mapping({("D", H): "B", ("D", V): "C"})

    def recombine(k):
        return Routing.from_mapping({("B", H): "D", ("C", V): "D",
                                     ("B", V): f"Exit{k}", ("C", H): f"Exit{k}"})

    def bob_station(k):
        if params.blocking:
            return Blocker("B", f"SinkBob{k}")
        return Mirror(f"M_B{k}", "B")

    stages = [Stage(0, (
        Rotator(("S",), alpha, rotator_sign),
        Routing.from_mapping({("S", H): "A", ("S", V): "D"}),
    ))]
    stages.append(Stage(1, (Rotator(("D",), theta, rotator_sign), split)))
    for k in range(2, m + 1):
        stages.append(Stage(k, (bob_station(k - 1), recombine(k),
                                Rotator(("D",), theta, rotator_sign), split)))
    stages.append(Stage(m + 1, (
        bob_station(m),
        recombine(m + 1),
        Mirror("M_A", "A"),
        Routing.from_mapping({("A", H): "F", ("A", V): "F", ("D", V): "G", ("D", H): "J"}),
    )))
    return CircuitModel(space, tuple(stages), inner_arms(m), params=params,
                        blocking=params.blocking)


@lru_cache(maxsize=256)
def raw_probabilities(params: ProtocolParams) -> DetectionDistribution:
    """Detector statistics from full state propagation."""
    circuit = build_circuit(params)
    probs = detect_probabilities(propagate(circuit.initial_state(), circuit))
    return DetectionDistribution(probs["D0"], probs["D1"], probs["D3"], probs["lost"])


def raw_probabilities_limit(p: float, blocking: bool) -> DetectionDistribution:
    """Infinite-stage detector statistics."""
    check_probability(p)
    if blocking:
        return DetectionDistribution(1.0 - p, p, 0.0, 0.0)
    return DetectionDistribution(1.0 - p, 0.0, p, 0.0)


def outcome_distribution(params: ProtocolParams) -> DetectionDistribution:
    """Propagated statistics for finite ``m``, the closed-form limit for ``m=None``."""
    if params.m is None:
        return raw_probabilities_limit(params.p, params.blocking)
    return raw_probabilities(params)


def zeno_survival(p: float, m: int) -> float:
    """Probability of reaching D1 when Bob blocks every one of ``m`` stages."""
    return p * math.cos(math.pi / (2 * m)) ** (2 * m)


def postselected_summary(p: float) -> PostselectionSummary:
    """Post-selected statistics when Bob's post-selected bits are balanced.

    The raw blocking prior is fixed by requiring half of the post-selected
    rounds to be blocking rounds.  At ``p == 1`` no not-blocking round ever
    survives post-selection; the limiting values are returned and the
    summary is flagged ``degenerate``.
    """
    check_probability(p)
    degenerate = p == 1.0
    if degenerate:
        warnings.warn("P = 1: not-blocking rounds are never post-selected; returning limits",
                      RuntimeWarning, stacklevel=2)
    p_b = (1.0 - p) / (2.0 - p)
    n = p_b + (1.0 - p_b) * (1.0 - p)
    table2 = {
        ("D0", "B"): (1.0 - p) / 2.0,
        ("D1", "B"): p / 2.0,
        ("D0", "NB"): 0.5,
        ("D1", "NB"): 0.0,
    }
    return PostselectionSummary(
        p=p,
        n=n,
        p_b_raw=p_b,
        table2=table2,
        p_l=p / (2.0 - p),
        p_c=(1.0 + p) / 2.0,
        acc_d0=1.0 / (2.0 - p),
        degenerate=degenerate,
    )


def sweep(p_grid) -> list[tuple[float, float, float, float]]:
    """Rows ``(P, Pc, accD0, postselect_prob)`` over ``p_grid``."""
    rows = []
    for p in p_grid:
        p = float(p)
        if not 0.0 <= p < 1.0:
            raise ConfigurationError(f"sweep values must lie in [0, 1), got {p}")
        s = postselected_summary(p)
        rows.append((p, s.p_c, s.acc_d0, s.postselect_prob))
    return rows
