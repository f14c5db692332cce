import numpy as np
import pytest

from counterfactual import ConfigurationError, UsageError, WeakValueUndefinedError
from counterfactual.histories import Projector
from counterfactual.montecarlo import make_rng
from counterfactual.protocol import ProtocolParams, build_circuit
from counterfactual.weakmeas import (
    BeamModel, DitherSpec, TimeSeries, bob_sensitivity, centroids, default_dithers,
    detect_peaks, off_probe_median, path_components, simulate_dither, spectrum, weak_value,
)

F_H = Projector(4, ("F",), "H")
J_H = Projector(4, ("J",), "H")


@pytest.fixture
def nb():
    return build_circuit(ProtocolParams(2 / 3, 2, False))


@pytest.mark.parametrize("k", [2, 3])
def test_bob_weak_value_zero(nb, k):
    assert weak_value(Projector(k, ("B",)), nb, F_H) == 0


@pytest.mark.parametrize("k", [1, 2, 3])
def test_a_arm_weak_value_one(nb, k):
    assert weak_value(Projector(k, ("A",)), nb, F_H) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("k", range(5))
def test_identity_weak_value(nb, k):
    ident = Projector(k, nb.space.modes)
    assert weak_value(ident, nb, F_H) == pytest.approx(1.0, abs=1e-12)
    assert weak_value(ident, nb, J_H) == pytest.approx(1.0, abs=1e-12)


def test_weak_value_toward_d3(nb):
    # backward state from J,H at t2 is cos|B,H> - sin|C,V>, equal overlap on both
    assert weak_value(Projector(2, ("B",)), nb, J_H) == pytest.approx(0.5, abs=1e-12)
    assert weak_value(Projector(2, ("C",)), nb, J_H) == pytest.approx(0.5, abs=1e-12)
    assert weak_value(Projector(3, ("B",)), nb, J_H) == pytest.approx(1.0, abs=1e-12)


def test_weak_value_undefined(nb):
    with pytest.raises(WeakValueUndefinedError):
        weak_value(Projector(2, ("B",)), nb, Projector(4, ("G",), "V"))


def test_weak_value_final_slice_checked(nb):
    with pytest.raises(UsageError):
        weak_value(Projector(2, ("B",)), nb, Projector(3, ("A",)))


def test_path_components_sum_to_final_state(nb):
    total = sum(path_components(nb).values())
    assert np.allclose(total, nb.states()[-1].vector, atol=1e-14)


def test_dither_spec_validation():
    with pytest.raises(ConfigurationError):
        DitherSpec("M_A", 0.0, 0.01)
    with pytest.raises(ConfigurationError):
        DitherSpec("M_A", 30.0, -1.0)
    with pytest.raises(ConfigurationError):
        BeamModel(0.0)


def test_d0_centroid_follows_alice_mirror_exactly(nb):
    series = simulate_dither(nb, default_dithers(), noise_rms=0.0)
    t = series["D0"].t
    assert np.allclose(series["D0"].samples, 0.01 * np.sin(2 * np.pi * 30 * t), atol=1e-15, rtol=0)


def test_zero_amplitudes_flat(nb):
    series = simulate_dither(nb, default_dithers(0, 0, 0), noise_rms=0.0)
    for s in series.values():
        assert np.all(s.samples == 0)


def test_bob_only_dither(nb):
    series = simulate_dither(nb, default_dithers(amp_a=0.0), noise_rms=0.0)
    assert np.all(np.abs(series["D0"].samples) < 1e-12)
    present = detect_peaks(spectrum(series["D3"]), [40, 50])
    assert present == {40: True, 50: True}


def test_aliasing_rejected(nb):
    with pytest.raises(ConfigurationError):
        simulate_dither(nb, default_dithers(), rate=90.0)


def test_non_integer_sample_count_rejected(nb):
    with pytest.raises(ConfigurationError):
        simulate_dither(nb, default_dithers(), rate=1000.0, duration=0.0005)


def test_unknown_mirror_rejected():
    blocked = build_circuit(ProtocolParams(0.5, 2, True))
    with pytest.raises(ConfigurationError):
        simulate_dither(blocked, default_dithers())


def test_strong_dither_warns(nb):
    with pytest.warns(RuntimeWarning):
        simulate_dither(nb, [DitherSpec("M_A", 30.0, 0.5)], noise_rms=0.0)


def test_noise_is_seeded(nb):
    a = simulate_dither(nb, default_dithers(), rng=make_rng(3, 1))
    b = simulate_dither(nb, default_dithers(), rng=make_rng(3, 1))
    assert np.array_equal(a["D0"].samples, b["D0"].samples)


def test_first_order_pointer_matches_weak_value(nb):
    # amplitude / diameter = 0.002
    delta = 0.01
    for mirror, k in (("M_B1", 2), ("M_B2", 3)):
        w = weak_value(Projector(k, ("B",)), nb, J_H).real
        c = centroids(nb, {mirror: np.array([delta])}, BeamModel(5.0))["D3"][0]
        assert c == pytest.approx(w * delta, rel=0.01)
    c = centroids(nb, {"M_A": np.array([delta])})["D0"][0]
    assert c == pytest.approx(delta, rel=0.01)


def test_pure_sinusoid_spectrum():
    rate, n, f, a = 1000.0, 2000, 30.0, 0.25
    t = np.arange(n) / rate
    spec = spectrum(TimeSeries(rate, a * np.sin(2 * np.pi * f * t)))
    assert spec.power_at(f) == pytest.approx((a * n / 2) ** 2, rel=1e-12)
    others = np.delete(spec.power, int(f * n / rate))
    assert others.max() < 1e-18
    assert spec.energy() == pytest.approx(np.sum((a * np.sin(2 * np.pi * f * t)) ** 2), rel=1e-9)


@pytest.mark.parametrize("n", [999, 1000])
def test_parseval(n):
    x = make_rng(5).normal(size=n)
    assert spectrum(TimeSeries(100.0, x)).energy() == pytest.approx(np.sum(x ** 2), rel=1e-9)


def test_empty_series_rejected():
    with pytest.raises(UsageError):
        spectrum(TimeSeries(10.0, np.array([])))


def test_white_noise_averaged_has_no_peaks():
    rng = make_rng(9)
    power = np.mean([spectrum(TimeSeries(1000.0, rng.normal(0, 1e-3, 2000))).power
                     for _ in range(100)], axis=0)
    assert power[1:].max() < 10 * np.median(power[1:])


def test_detect_peaks_canonical(nb):
    series = simulate_dither(nb, default_dithers(), rng=make_rng(0, 1))
    assert detect_peaks(spectrum(series["D0"]), [30, 40, 50]) == {30: True, 40: False, 50: False}
    assert detect_peaks(spectrum(series["D3"]), [40, 50]) == {40: True, 50: True}


def test_detect_peaks_empty_and_misaligned(nb):
    spec = spectrum(simulate_dither(nb, default_dithers())["D0"])
    assert detect_peaks(spec, []) == {}
    with pytest.raises(UsageError, match="duration"):
        detect_peaks(spec, [30.25])


def test_linearity_in_alice_amplitude(nb):
    p1 = spectrum(simulate_dither(nb, default_dithers(0.01), noise_rms=0)["D0"]).power_at(30)
    p2 = spectrum(simulate_dither(nb, default_dithers(0.02), noise_rms=0)["D0"]).power_at(30)
    assert p2 / p1 == pytest.approx(4.0, rel=1e-3)


@pytest.mark.parametrize("mirror", ["M_B1", "M_B2"])
@pytest.mark.parametrize("kind", ["phase", "tilt", "displacement"])
def test_bob_cannot_reach_d0(nb, mirror, kind):
    s = bob_sensitivity(nb, mirror, kind)
    assert s.first < 1e-10 and s.second < 1e-10


def test_bob_phase_reaches_d1(nb):
    assert bob_sensitivity(nb, "M_B1", "phase", "D1").first > 0.1


def test_alice_mirror_reaches_d0(nb):
    assert bob_sensitivity(nb, "M_A", "phase", "D0").first > 0.1
    assert bob_sensitivity(nb, "M_A", "displacement", "D0").first == pytest.approx(1.0)


def test_bob_sensitivity_bad_kind(nb):
    with pytest.raises(UsageError):
        bob_sensitivity(nb, "M_B1", "twist")
