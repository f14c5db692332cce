"""Randomized invariants, 1000 cases per property."""

import itertools

import numpy as np
from hypothesis import given, settings, strategies as st

from counterfactual.histories import History, Projector, chain_ket, check_consistency, family_y
from counterfactual.montecarlo import make_rng, sample_rounds, transmit_message
from counterfactual.optics import PureState, rotation_matrix
from counterfactual.protocol import ProtocolParams, build_circuit
from counterfactual.weakmeas import BeamModel, centroids, weak_value

CASES = settings(max_examples=1000, deadline=None, derandomize=True)

probs = st.floats(0.0, 1.0, allow_nan=False)
inner = st.floats(0.02, 0.98, allow_nan=False)
stages = st.integers(1, 5)
angles = st.floats(-2 * np.pi, 2 * np.pi, allow_nan=False)
seeds = st.integers(0, 2 ** 32 - 1)


def random_state(space, rng):
    live = [m for m in space.modes if not space.is_sink(m)]
    vec = np.zeros(space.dim, complex)
    for m in live:
        i = space.index(m, 0)
        vec[i:i + 2] = rng.normal(size=2) + 1j * rng.normal(size=2)
    return PureState(space, vec / np.linalg.norm(vec))


@CASES
@given(p=probs, m=stages, blocking=st.booleans(), sign=st.sampled_from([1, -1]), seed=seeds)
def test_norm_conserved_and_sinks_only_fill(p, m, blocking, sign, seed):
    circuit = build_circuit(ProtocolParams(p, m, blocking), rotator_sign=sign)
    space = circuit.space
    vec = random_state(space, np.random.default_rng(seed)).vector
    sunk = 0.0
    for stage in circuit.stages:
        vec = stage.act(space, vec)
        state = PureState(space, vec)
        assert abs(state.norm() - 1.0) < 1e-12
        assert state.sink_probability() >= sunk - 1e-15
        sunk = state.sink_probability()


@CASES
@given(a=angles, b=angles, sign=st.sampled_from([1, -1]))
def test_rotators_compose(a, b, sign):
    lhs = rotation_matrix(a, sign) @ rotation_matrix(b, sign)
    assert np.allclose(lhs, rotation_matrix(a + b, sign), atol=1e-12)
    assert np.allclose(rotation_matrix(a, sign) @ rotation_matrix(-a, sign), np.eye(2), atol=1e-12)


@CASES
@given(p=inner, m=stages, data=st.data())
def test_weak_values_sum_to_one(p, m, data):
    circuit = build_circuit(ProtocolParams(p, m, False))
    n = circuit.n_slices - 1
    k = data.draw(st.integers(0, n))
    final = Projector(n, (data.draw(st.sampled_from(["F", "J"])),), "H")
    total = sum(weak_value(Projector(k, (mode,)), circuit, final) for mode in circuit.space.modes)
    assert abs(total - 1.0) < 1e-9


@CASES
@given(p=probs, sign=st.sampled_from([1, -1]))
def test_family_y_chain_kets_sum_to_final(p, sign):
    circuit = build_circuit(ProtocolParams(p, 2, False), rotator_sign=sign)
    total = sum(chain_ket(h, circuit).vector for h in family_y(circuit))
    final = Projector(4, ("F",), "H").matrix(circuit.space) @ circuit.states()[-1].vector
    assert np.allclose(total, final, atol=1e-12)


@CASES
@given(p=probs, m=st.integers(1, 3), data=st.data())
def test_coarse_chain_kets_sum_to_final(p, m, data):
    circuit = build_circuit(ProtocolParams(p, m, False))
    modes = circuit.space.modes
    n = circuit.n_slices - 1
    slots = []
    for k in range(1, n):
        mask = data.draw(st.lists(st.booleans(), min_size=len(modes), max_size=len(modes)))
        part = tuple(mo for mo, keep in zip(modes, mask) if keep)
        rest = tuple(mo for mo, keep in zip(modes, mask) if not keep)
        slots.append([Projector(k, cell) for cell in (part, rest) if cell])
    first = Projector(0, modes)
    last = Projector(n, (data.draw(st.sampled_from(["F", "G", "J"])),))
    total = sum(chain_ket(History((first, *mid, last)), circuit).vector
                for mid in itertools.product(*slots))
    expected = last.matrix(circuit.space) @ circuit.states()[-1].vector
    assert np.allclose(total, expected, atol=1e-12)


@CASES
@given(p=probs, sign=st.sampled_from([1, -1]))
def test_family_y_conclusion_convention_free(p, sign):
    circuit = build_circuit(ProtocolParams(p, 2, False), rotator_sign=sign)
    ok, gram = check_consistency(family_y(circuit), circuit)
    assert ok
    assert np.sum(np.diag(gram).real > 1e-24) == (1 if p < 1 else 0)


@CASES
@given(seed=seeds, stream=st.integers(0, 7), p=probs,
       m=st.one_of(st.none(), stages), blocking=st.booleans(), n=st.integers(1, 500))
def test_sampling_deterministic_under_seed(seed, stream, p, m, blocking, n):
    params = ProtocolParams(p, m, blocking)
    a = sample_rounds(params, n, make_rng(seed, stream))
    b = sample_rounds(params, n, make_rng(seed, stream))
    assert np.array_equal(a, b)


@CASES
@given(seed=seeds, p=st.floats(0.0, 0.9), bits=st.lists(st.integers(0, 1), min_size=1, max_size=30))
def test_transmission_deterministic_under_seed(seed, p, bits):
    params = ProtocolParams(p, None)
    assert transmit_message(params, bits, make_rng(seed)) == transmit_message(params, bits, make_rng(seed))


@CASES
@given(p=inner, delta=st.floats(1e-4, 1e-2), mirror=st.sampled_from([("M_B1", 2), ("M_B2", 3)]))
def test_pointer_shift_is_weak_value_times_displacement(p, delta, mirror):
    circuit = build_circuit(ProtocolParams(p, 2, False))
    name, k = mirror
    w = weak_value(Projector(k, ("B",)), circuit, Projector(4, ("J",), "H")).real
    shift = centroids(circuit, {name: np.array([delta])}, BeamModel(5.0), ("D3",))["D3"][0]
    assert abs(shift - w * delta) <= 1e-3 * delta
