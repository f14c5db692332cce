import numpy as np
import pytest

from counterfactual import ConfigurationError, InconsistentFamilyError, UsageError
from counterfactual.histories import (
    History, HistoryFamily, Projector, a_path, chain_ket, check_consistency, family_y,
    history_probabilities,
)
from counterfactual.optics import PureState
from counterfactual.protocol import ProtocolParams, build_circuit


@pytest.fixture
def circuit():
    return build_circuit(ProtocolParams(2 / 3, 2, False))


def hist(*arms, first=("S", "H"), last=("F", "H")):
    projs = [Projector(0, (first[0],), first[1])]
    projs += [Projector(k, (a,)) for k, a in enumerate(arms, start=1)]
    projs.append(Projector(len(arms) + 1, (last[0],), last[1]))
    return History(tuple(projs))


def test_projector_algebra(circuit):
    for pol in "HVI":
        q = Projector(2, ("A", "B"), pol).matrix(circuit.space)
        assert np.allclose(q @ q, q, atol=1e-12)
        assert np.allclose(q.conj().T, q, atol=1e-12)


def test_slot_projectors_orthogonal(circuit):
    qs = [Projector(2, (a,)).matrix(circuit.space) for a in ("A", "B", "C")]
    for i in range(3):
        for j in range(3):
            if i != j:
                assert np.allclose(qs[i] @ qs[j], 0)
    finals = [Projector(4, (a,)).matrix(circuit.space) for a in ("F", "G", "J")]
    assert np.allclose(finals[0] @ finals[1], 0) and np.allclose(finals[0] @ finals[2], 0)


def test_projector_rejects_bad_polarization():
    with pytest.raises(ConfigurationError):
        Projector(0, ("S",), "X")


def test_history_slices_must_be_ordered():
    with pytest.raises(UsageError):
        History((Projector(0, ("S",)), Projector(2, ("A",))))


def test_a_path_chain_ket_is_f_h(circuit):
    k = chain_ket(hist("A", "A", "A"), circuit)
    f_h = PureState.basis(circuit.space, "F", 0).vector
    overlap = abs(np.vdot(f_h, k.vector)) ** 2
    assert overlap == pytest.approx(k.weight, abs=1e-15)
    assert k.weight == pytest.approx(1 / 3, abs=1e-12)


def test_worked_null_chain_ket(circuit):
    k = chain_ket(hist("D", "C", "C"), circuit)
    assert np.all(k.vector == 0)


def test_orthogonal_initial_projector(circuit):
    k = chain_ket(hist("A", "A", "A", first=("S", "V")), circuit)
    assert k.weight == 0.0


def test_chain_ket_slice_mismatch(circuit):
    with pytest.raises(UsageError):
        chain_ket(hist("A", "A"), circuit)


def test_family_y_shape(circuit):
    fam = family_y(circuit)
    assert len(fam) == 18
    assert len({h.projectors[0] for h in fam}) == 1
    assert len({h.projectors[-1] for h in fam}) == 1
    nonzero = [h for h in fam if chain_ket(h, circuit).weight > 0]
    assert nonzero == [a_path(fam)]


def test_family_y_needs_two_stages():
    with pytest.raises(ConfigurationError):
        family_y(build_circuit(ProtocolParams(0.5, 3)))


def test_family_y_consistent(circuit):
    ok, gram = check_consistency(family_y(circuit), circuit)
    assert ok
    diag = np.diag(gram).real
    assert np.count_nonzero(diag) == 1
    assert diag.max() == pytest.approx(1 / 3, abs=1e-12)


def test_single_history_family_trivially_consistent(circuit):
    ok, gram = check_consistency(HistoryFamily((hist("D", "B", "B"),)), circuit)
    assert ok and gram.shape == (1, 1)


@pytest.mark.parametrize("p", [0.0, 2 / 3, 0.9])
def test_a_path_probability_one(p):
    c = build_circuit(ProtocolParams(p, 2, False))
    fam = family_y(c)
    probs = history_probabilities(fam, c)
    assert probs[a_path(fam)] == pytest.approx(1.0, abs=1e-12)
    assert sum(probs.values()) == pytest.approx(1.0, abs=1e-12)
    assert all(v == 0.0 for h, v in probs.items() if h != a_path(fam))


def test_inconsistent_family_refused():
    # post-select on J,H: histories through B3 and C3 at t2 interfere
    c = build_circuit(ProtocolParams(0.5, 2, False))
    fam = HistoryFamily((hist("D", "B", "B", last=("J", "H")), hist("D", "C", "B", last=("J", "H"))))
    ok, gram = check_consistency(fam, c)
    assert not ok
    with pytest.raises(InconsistentFamilyError):
        history_probabilities(fam, c)


def test_sum_rule(circuit):
    fam = family_y(circuit)
    total = sum(chain_ket(h, circuit).vector for h in fam)
    final = Projector(4, ("F",), "H").matrix(circuit.space) @ circuit.states()[-1].vector
    assert np.allclose(total, final, atol=1e-12)


def test_convention_flip_keeps_conclusion():
    for sign in (1, -1):
        c = build_circuit(ProtocolParams(0.7, 2, False), rotator_sign=sign)
        fam = family_y(c)
        ok, gram = check_consistency(fam, c)
        assert ok
        assert np.sum(np.diag(gram).real > 1e-24) == 1


def test_labels_are_readable(circuit):
    assert a_path(family_y(circuit)).label == "S₀⊗H₀ ⊙ A₁⊗I₁ ⊙ A₂⊗I₂ ⊙ A₃⊗I₃ ⊙ F₄⊗H₄"
