"""
Consistent-histories analysis of the interferometer.

A history is one projector per time slice.  Its chain ket is

    K = P_n T_{n,n-1} ... P_1 T_{1,0} P_0 |source>

and its weight ``<K|K>`` is the probability of that sequence of events.
A family can be assigned probabilities only when all its chain kets are
mutually orthogonal.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .exceptions import ConfigurationError, InconsistentFamilyError, UsageError
from .optics import TOL, CircuitModel, ModeSpace

#: Off-diagonal Gram magnitude below which two chain kets count as orthogonal.
CONSISTENCY_TOL = 1e-10

_SUBSCRIPT = str.maketrans("0123456789", "₀₁₂₃₄₅₆₇₈₉")


@dataclass(frozen=True)
class Projector:
    """Projector onto ``modes`` (x) ``pol`` at time slice ``slice``; ``pol`` is H, V or I."""

    slice: int
    modes: tuple[str, ...]
    pol: str = "I"

    def __post_init__(self):
        if self.pol not in ("H", "V", "I"):
            raise ConfigurationError(f"polarization must be H, V or I, got {self.pol!r}")
        object.__setattr__(self, "modes", tuple(self.modes))

    def matrix(self, space: ModeSpace) -> np.ndarray:
        diag = np.zeros(space.dim)
        for m in self.modes:
            i = space.index(m, 0)
            if self.pol in ("H", "I"):
                diag[i] = 1.0
            if self.pol in ("V", "I"):
                diag[i + 1] = 1.0
        return np.diag(diag).astype(complex)

    @property
    def label(self) -> str:
        arm = "+".join(self.modes)
        return f"{arm}{self.slice}⊗{self.pol}{self.slice}".translate(_SUBSCRIPT)


@dataclass(frozen=True)
class History:
    projectors: tuple[Projector, ...]

    def __post_init__(self):
        slices = [p.slice for p in self.projectors]
        if slices != list(range(len(slices))):
            raise UsageError(f"history needs one projector per slice 0..n in order, got {slices}")

    @property
    def label(self) -> str:
        return " ⊙ ".join(p.label for p in self.projectors)

    def arm_path(self) -> tuple[str, ...]:
        return tuple("+".join(p.modes) for p in self.projectors)


@dataclass(frozen=True)
class ChainKet:
    history: History
    vector: np.ndarray

    @property
    def weight(self) -> float:
        return float(np.vdot(self.vector, self.vector).real)


@dataclass(frozen=True)
class HistoryFamily:
    histories: tuple[History, ...]

    def __len__(self):
        return len(self.histories)

    def __iter__(self):
        return iter(self.histories)


def chain_ket(history: History, circuit: CircuitModel) -> ChainKet:
    if len(history.projectors) != circuit.n_slices:
        raise UsageError(
            f"history has {len(history.projectors)} slices, circuit has {circuit.n_slices}")
    space = circuit.space
    vec = circuit.initial_state().vector
    vec = history.projectors[0].matrix(space) @ vec
    for u, proj in zip(circuit.unitaries, history.projectors[1:]):
        vec = proj.matrix(space) @ (u @ vec)
    return ChainKet(history, vec)


def family_y(circuit: CircuitModel) -> HistoryFamily:
    """The 18 histories S0H0 ⊙ {A1,D1} ⊙ {A2,B2,C2} ⊙ {A3,B3,C3} ⊙ F4H4."""
    if circuit.n_slices != 5 or circuit.arms[2] != ("A", "B", "C") or circuit.arms[3] != ("A", "B", "C"):
        raise ConfigurationError("family Y needs a two-stage circuit with arms {A, B, C} at t2 and t3")
    first = Projector(0, ("S",), "H")
    last = Projector(4, ("F",), "H")
    histories = []
    for a1, a2, a3 in itertools.product(("A", "D"), ("A", "B", "C"), ("A", "B", "C")):
        histories.append(History((first, Projector(1, (a1,)), Projector(2, (a2,)),
                                  Projector(3, (a3,)), last)))
    return HistoryFamily(tuple(histories))


def gram_matrix(family: HistoryFamily, circuit: CircuitModel) -> np.ndarray:
    kets = np.array([chain_ket(h, circuit).vector for h in family])
    return kets.conj() @ kets.T


def check_consistency(family: HistoryFamily, circuit: CircuitModel) -> tuple[bool, np.ndarray]:
    """``(consistent, gram)``: consistent when every off-diagonal entry is below ``CONSISTENCY_TOL``."""
    gram = gram_matrix(family, circuit)
    off = gram - np.diag(np.diag(gram))
    return bool(np.all(np.abs(off) < CONSISTENCY_TOL)), gram


def history_probabilities(family: HistoryFamily, circuit: CircuitModel) -> dict[History, float]:
    """Probability of each history conditioned on the family's final projector."""
    consistent, gram = check_consistency(family, circuit)
    if not consistent:
        raise InconsistentFamilyError("cannot assign probabilities: chain kets are not orthogonal")
    weights = np.diag(gram).real
    total = weights.sum()
    if total <= TOL ** 2:
        raise InconsistentFamilyError("cannot assign probabilities: the family has zero total weight")
    return {h: float(w / total) for h, w in zip(family, weights)}


def a_path(family: HistoryFamily) -> History:
    """The history in which the photon stays on arm A throughout."""
    for h in family:
        if all(p.modes == ("A",) for p in h.projectors[1:-1]):
            return h
    raise UsageError("family has no all-A history")
