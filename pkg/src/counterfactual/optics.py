"""
Single-photon amplitudes over (spatial arm x polarization) modes.

A photon state is a complex vector indexed by ``(mode, polarization)``
pairs.  Optical elements are norm-preserving maps on that vector:

- ``Rotator``: rotates (H, V) by an angle on a set of arms.
- ``Routing``: relocates amplitude between arms without touching the
  polarization. A polarizing beam splitter is a routing that sends the
  H and V parts of an arm to different places.
- ``Blocker``: routes everything in an arm into a sink arm. Sinks are
  terminal, so absorbed probability stays readable from the final state.
- ``Mirror``: a named reflection on one arm.  Carries an optional phase
  and polarization tilt so that perturbations at a mirror can be probed.

Every element exposes ``act(space, array)``, applying it to a state
vector or to the columns of a matrix.  Elements are grouped into
``Stage`` objects, one per time slice t_k -> t_{k+1}, and stages into a
``CircuitModel``.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from enum import IntEnum
from functools import cached_property
from typing import Iterable, Mapping

import numpy as np

from .exceptions import ConfigurationError, UsageError

#: Default absolute tolerance for norm and probability bookkeeping.
TOL = 1e-12

#: Output arms and the detector that sits on each of them.
DETECTOR_ARMS = {"F": "D0", "G": "D1", "J": "D3"}
DETECTORS = ("D0", "D1", "D3")


class Polarization(IntEnum):
    H = 0
    V = 1


H = Polarization.H
V = Polarization.V


@dataclass(frozen=True)
class ModeSpace:
    """Ordered set of spatial arms; each arm carries an H and a V amplitude."""

    modes: tuple[str, ...]
    sinks: frozenset[str] = frozenset()

    def __post_init__(self):
        if len(set(self.modes)) != len(self.modes):
            raise ConfigurationError(f"duplicate mode labels in {self.modes}")
        unknown = set(self.sinks) - set(self.modes)
        if unknown:
            raise ConfigurationError(f"sinks {sorted(unknown)} are not modes")

    @property
    def dim(self) -> int:
        return 2 * len(self.modes)

    def check(self, mode: str) -> None:
        if mode not in self._positions:
            raise ConfigurationError(f"unknown mode {mode!r}")

    def index(self, mode: str, pol: Polarization | int) -> int:
        self.check(mode)
        return 2 * self._positions[mode] + int(pol)

    def is_sink(self, mode: str) -> bool:
        return mode in self.sinks

    @cached_property
    def _positions(self) -> dict[str, int]:
        return {m: i for i, m in enumerate(self.modes)}


class PureState:
    """Normalized photon amplitude vector on a ``ModeSpace``."""

    __slots__ = ("space", "vector")

    def __init__(self, space: ModeSpace, vector):
        vector = np.asarray(vector, dtype=complex)
        if vector.shape != (space.dim,):
            raise UsageError(f"vector shape {vector.shape} != ({space.dim},)")
        self.space = space
        self.vector = vector

    @classmethod
    def basis(cls, space: ModeSpace, mode: str, pol: Polarization | int = H) -> PureState:
        vec = np.zeros(space.dim, dtype=complex)
        vec[space.index(mode, pol)] = 1.0
        return cls(space, vec)

    def amplitude(self, mode: str, pol: Polarization | int) -> complex:
        return complex(self.vector[self.space.index(mode, pol)])

    def mode_probability(self, mode: str) -> float:
        i = self.space.index(mode, H)
        return float(np.sum(np.abs(self.vector[i:i + 2]) ** 2))

    def sink_probability(self) -> float:
        return sum(self.mode_probability(m) for m in self.space.sinks)

    def norm(self) -> float:
        return float(np.linalg.norm(self.vector))

    def evolve(self, matrix: np.ndarray) -> PureState:
        return PureState(self.space, matrix @ self.vector)

    def allclose(self, other: PureState, atol: float = TOL) -> bool:
        return self.space == other.space and np.allclose(self.vector, other.vector, atol=atol, rtol=0)

    def __repr__(self):
        terms = []
        for m in self.space.modes:
            for p in Polarization:
                a = self.amplitude(m, p)
                if abs(a) > TOL:
                    terms.append(f"({a:.6g})|{m},{p.name}>")
        return "PureState(" + (" + ".join(terms) or "0") + ")"


def rotation_matrix(theta: float, sign: int = 1) -> np.ndarray:
    """(H, V) rotation; with ``sign=1`` V maps to ``-sin(theta) H + cos(theta) V``."""
    c, s = np.cos(theta), sign * np.sin(theta)
    return np.array([[c, -s], [s, c]])


# ---------------------------------------------------------------- elements


@dataclass(frozen=True)
class Rotator:
    modes: tuple[str, ...]
    theta: float
    sign: int = 1

    def act(self, space: ModeSpace, arr: np.ndarray) -> np.ndarray:
        if not np.isfinite(self.theta):
            raise ConfigurationError(f"rotation angle must be finite, got {self.theta}")
        out = arr.copy()
        r = rotation_matrix(self.theta, self.sign)
        for m in self.modes:
            i = space.index(m, H)
            out[i:i + 2] = r @ arr[i:i + 2]
        return out


@dataclass(frozen=True)
class Routing:
    """Relocate amplitude from ``(mode, pol)`` to ``(target, pol)``.

    The partial map is completed to a permutation of the whole basis so
    the element is unitary: any target slot that is not itself a source
    hands its (normally zero) amplitude back to a vacated source slot.
    """

    routes: tuple[tuple[tuple[str, int], str], ...]

    @classmethod
    def from_mapping(cls, routing: Mapping[tuple[str, Polarization | int], str]) -> Routing:
        return cls(tuple(((m, int(p)), dst) for (m, p), dst in routing.items()))

    def permutation(self, space: ModeSpace) -> np.ndarray:
        perm = np.arange(space.dim)
        if not self.routes:
            return perm
        src = [space.index(m, p) for (m, p), _ in self.routes]
        dst = [space.index(d, p) for (_, p), d in self.routes]
        if len(set(dst)) != len(dst):
            raise ConfigurationError("routing is not injective; two inputs share an output")
        for (m, _), _d in self.routes:
            if space.is_sink(m):
                raise ConfigurationError(f"cannot route amplitude out of sink {m!r}")
        src_set, dst_set = set(src), set(dst)
        perm[src] = dst
        freed = sorted(src_set - dst_set)
        displaced = sorted(dst_set - src_set)
        perm[displaced] = freed
        return perm

    def act(self, space: ModeSpace, arr: np.ndarray) -> np.ndarray:
        out = np.empty_like(arr)
        out[self.permutation(space)] = arr
        return out


@dataclass(frozen=True)
class Blocker:
    mode: str
    sink: str

    def routing(self) -> Routing:
        return Routing((((self.mode, int(H)), self.sink), ((self.mode, int(V)), self.sink)))

    def act(self, space: ModeSpace, arr: np.ndarray) -> np.ndarray:
        space.check(self.mode)
        if not space.is_sink(self.sink):
            raise ConfigurationError(f"{self.sink!r} is not a sink mode")
        return self.routing().act(space, arr)


@dataclass(frozen=True)
class Mirror:
    """Named mirror on ``mode``; ``phase`` and ``tilt`` default to a plain reflection."""

    name: str
    mode: str
    phase: float = 0.0
    tilt: float = 0.0

    def local(self) -> np.ndarray:
        return np.exp(1j * self.phase) * rotation_matrix(self.tilt)

    def act(self, space: ModeSpace, arr: np.ndarray) -> np.ndarray:
        out = arr.copy()
        i = space.index(self.mode, H)
        out[i:i + 2] = self.local() @ arr[i:i + 2]
        return out


def element_matrix(element, space: ModeSpace) -> np.ndarray:
    """Dense matrix of any element on ``space``."""
    return element.act(space, np.eye(space.dim, dtype=complex))


# ---------------------------------------------------------------- state ops


def _apply(element, state: PureState) -> PureState:
    return PureState(state.space, element.act(state.space, state.vector))


def apply_rotator(state: PureState, modes: Iterable[str], theta: float, sign: int = 1) -> PureState:
    """Rotate the polarization of every listed arm by ``theta`` radians."""
    return _apply(Rotator(tuple(modes), theta, sign), state)


def apply_pbs(state: PureState, routing: Mapping[tuple[str, Polarization | int], str]) -> PureState:
    """Move the amplitude of each routed ``(mode, pol)`` to ``(routing[mode, pol], pol)``."""
    return _apply(Routing.from_mapping(routing), state)


def apply_block(state: PureState, modes: Iterable[str], sink: str) -> PureState:
    """Absorb both polarizations of ``modes`` into ``sink``.

    A sink has exactly one H and one V slot, so it can serve a single
    blocked arm, and only while it is still empty.
    """
    modes = tuple(modes)
    space = state.space
    if not space.is_sink(sink):
        raise ConfigurationError(f"{sink!r} is not a sink mode")
    if len(modes) > 1:
        raise ConfigurationError(f"sink collision: {len(modes)} arms share sink {sink!r}")
    if state.mode_probability(sink) > 0:
        raise ConfigurationError(f"sink collision: {sink!r} already holds amplitude")
    for m in modes:
        state = _apply(Blocker(m, sink), state)
    return state


# ---------------------------------------------------------------- circuits


@dataclass(frozen=True)
class Stage:
    """The elements acting between time slices ``index`` and ``index + 1``."""

    index: int
    elements: tuple

    def act(self, space: ModeSpace, arr: np.ndarray) -> np.ndarray:
        for el in self.elements:
            arr = el.act(space, arr)
        return arr

    def matrix(self, space: ModeSpace) -> np.ndarray:
        return self.act(space, np.eye(space.dim, dtype=complex))


@dataclass(frozen=True)
class CircuitModel:
    """Ordered stages T(t0->t1), T(t1->t2), ... on a fixed mode space.

    ``arms`` lists, per time slice, the arms that can hold amplitude at
    that slice.  ``source`` is the (mode, polarization) the photon starts in.
    """

    space: ModeSpace
    stages: tuple[Stage, ...]
    arms: tuple[tuple[str, ...], ...]
    source: tuple[str, int] = ("S", int(H))
    params: object = None
    blocking: bool = False
    _cache: dict = field(default_factory=dict, compare=False, repr=False, hash=False)

    @property
    def n_slices(self) -> int:
        return len(self.stages) + 1

    @property
    def unitaries(self) -> list[np.ndarray]:
        if "u" not in self._cache:
            self._cache["u"] = [st.matrix(self.space) for st in self.stages]
        return self._cache["u"]

    def initial_state(self) -> PureState:
        return PureState.basis(self.space, *self.source)

    def states(self, state: PureState | None = None) -> list[PureState]:
        """State at every slice t0 ... tn."""
        state = self.initial_state() if state is None else state
        out = [state]
        for st in self.stages:
            state = PureState(self.space, st.act(self.space, state.vector))
            out.append(state)
        return out

    def evolution(self, start: int, stop: int) -> np.ndarray:
        """Product T(stop, stop-1) ... T(start+1, start)."""
        u = np.eye(self.space.dim, dtype=complex)
        for k in range(start, stop):
            u = self.unitaries[k] @ u
        return u

    def mirrors(self) -> dict[str, Mirror]:
        return {el.name: el for st in self.stages for el in st.elements if isinstance(el, Mirror)}

    def replace_mirror(self, name: str, **changes) -> CircuitModel:
        """Copy of the circuit with mirror ``name`` given new ``phase``/``tilt``."""
        if name not in self.mirrors():
            raise ConfigurationError(f"circuit has no mirror {name!r}")
        stages = tuple(
            Stage(st.index, tuple(
                dataclasses.replace(el, **changes) if isinstance(el, Mirror) and el.name == name else el
                for el in st.elements))
            for st in self.stages)
        return dataclasses.replace(self, stages=stages, _cache={})


def propagate(state: PureState, circuit: CircuitModel) -> PureState:
    """Apply every stage of ``circuit`` to ``state`` in time order."""
    if state.space != circuit.space:
        raise UsageError("state and circuit live on different mode spaces")
    if abs(state.norm() - 1.0) > 1e-9:
        raise UsageError(f"input state is not normalized (norm {state.norm():.3g})")
    for st in circuit.stages:
        state = PureState(state.space, st.act(state.space, state.vector))
    return state


def detect_probabilities(state: PureState) -> dict[str, float]:
    """Click probabilities at D0/D1/D3 plus probability absorbed in sinks."""
    space = state.space
    out = {det: state.mode_probability(arm) if arm in space.modes else 0.0
           for arm, det in DETECTOR_ARMS.items()}
    out = {det: out[det] for det in DETECTORS}
    out["lost"] = state.sink_probability()
    stray = state.norm() ** 2 - sum(out.values())
    if abs(stray) > 1e-9:
        raise UsageError(f"state still has probability {stray:.3g} inside the interferometer")
    return out
