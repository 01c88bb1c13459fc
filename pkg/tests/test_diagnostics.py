import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mfdirac.diagnostics import (ManifoldDistance, YMetric, YMetricSpec, charge, dist_to_manifold,
                                 energy, overlap, smoothstep_cutoff, time_spectrum, ynorm)
from mfdirac.dynamics import initial_data, smooth_noise_hat
from mfdirac.grid import SpinorField
from mfdirac.solitary import build_atlas


@pytest.fixture(scope="module")
def atlas32(rho, quartic, grid32):
    return build_atlas(rho, quartic, omega_grid=np.linspace(-0.8, 0.8, 9), grid=grid32)


@pytest.fixture(scope="module")
def md32(atlas32):
    return ManifoldDistance(atlas32)


@pytest.fixture(scope="module")
def noisy(rho, quartic, grid32):
    return initial_data("perturbedSolitary", {"omega": 0.3, "delta": 0.3, "seed": 11}, grid32, rho, quartic)


def test_charge_both_spaces(noisy):
    assert charge(noisy) == pytest.approx(charge(noisy.to_position()), rel=1e-12)


def test_energy_of_zero_field(rho, quartic, grid32):
    z = SpinorField(grid32, np.zeros((4,) + grid32.shape))
    assert energy(z, rho, quartic) == 0.0 and overlap(z, rho) == 0


def test_energy_of_free_upper_spinor(rho, grid32):
    # a beta(+1) packet with no nonlinearity: E = 1/2 <psi, D psi>
    from mfdirac.model import PolynomialPotential

    psi = initial_data("gaussianPacket", {"width": 2.0}, grid32)
    E = energy(psi, rho, PolynomialPotential.zero())
    # D = beta m + alpha.xi, and the alpha part has zero expectation here
    assert E == pytest.approx(0.5 * charge(psi), rel=1e-12)


def test_smoothstep():
    r = np.array([0.0, 0.5, 1.0, 1.5, 2.0, 3.0])
    assert smoothstep_cutoff(r).tolist() == [1.0, 1.0, 1.0, 0.5, 0.0, 0.0]
    h = 1e-5
    for edge in (1.0, 2.0):
        d1 = (smoothstep_cutoff(edge + h) - smoothstep_cutoff(edge - h)) / (2 * h)
        assert abs(d1) < 1e-8


def test_metric_spec(grid64, grid32):
    assert YMetricSpec().resolve(grid64) == 8
    assert YMetricSpec().resolve(grid32) == 4
    with pytest.raises(ValueError):
        YMetricSpec(epsilon=0.0)
    with pytest.raises(ValueError):
        YMetricSpec(Rmax=5).resolve(grid32)


@given(st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False))
@settings(max_examples=20, deadline=None)
def test_ynorm_homogeneous(noisy, c):
    base = ynorm(noisy)
    assert ynorm(c * noisy) == pytest.approx(abs(c) * base, rel=1e-12, abs=1e-14)


def test_ynorm_space_independent(noisy):
    assert ynorm(noisy.to_position()) == pytest.approx(ynorm(noisy), rel=1e-12)


def test_ynorm_bounded_by_l2(noisy):
    metric = YMetric(noisy.grid, 1.0)
    # chi <= 1 and the H^-eps multiplier is <= m^-eps
    assert metric.norm(noisy) <= np.sqrt(charge(noisy)) * metric.weights.sum()
    assert 0 < metric.truncation_bound(noisy) < metric.norm(noisy)


def test_distance_zero_on_atlas_wave(atlas32, md32):
    w = atlas32.wave(4, 0, phase=0.7)
    r = md32(w.field)
    assert r.d < 1e-10 and r.omega_star == pytest.approx(0.0, abs=1e-6)
    assert r.d_zero > 0.1


def test_distance_between_grid_points(atlas32, md32):
    w = atlas32.wave_at(0.13)
    r = md32(w.field)
    assert r.omega_star == pytest.approx(0.13, abs=1e-4)
    assert r.d < 1e-6


@given(st.floats(0, 2 * np.pi))
@settings(max_examples=10, deadline=None)
def test_distance_phase_invariant(md32, noisy, theta):
    a = md32(noisy).d
    assert md32(np.exp(1j * theta) * noisy).d == pytest.approx(a, abs=1e-10)


def test_distance_below_ynorm(md32, noisy, grid32):
    for seed in range(3):
        psi = SpinorField(grid32, smooth_noise_hat(grid32, seed))
        assert md32(psi).d <= ynorm(psi) + 1e-14
    assert md32(noisy).d <= ynorm(noisy)


def test_distance_triangle(md32, grid32, noisy):
    rng = np.random.default_rng(0)
    for seed in range(4):
        eta = SpinorField(grid32, smooth_noise_hat(grid32, 100 + seed))
        other = noisy + float(rng.uniform(0.05, 0.5)) * eta
        gap = abs(md32(noisy).d - md32(other).d)
        assert gap <= ynorm(noisy - other) + 1e-12


def test_dist_function_wrapper(atlas32, noisy):
    d, om, th = dist_to_manifold(noisy, atlas32)
    assert d == pytest.approx(ManifoldDistance(atlas32)(noisy).d)


# time spectrum --------------------------------------------------------------
def tone(t, *parts):
    return sum(a * np.exp(-1j * w * t) for a, w in parts)


def test_pure_tone():
    t = np.arange(0, 40.0001, 0.01)
    rep = time_spectrum(t, tone(t, (1.0, 0.5)), (0, 40))
    assert abs(rep.peak_omega - 0.5) < 2 * np.pi / 40
    assert rep.mass_outside / rep.total <= 1e-3
    assert rep.peak_count() == 1


def test_two_tones_parseval():
    t = np.arange(0, 100.0001, 0.01)
    rep = time_spectrum(t, tone(t, (1.0, 0.5), (0.1, 3.0)), (0, 100))
    assert rep.mass_outside / rep.total == pytest.approx(0.01 / 1.01, abs=1e-3)
    assert rep.mass_inside + rep.mass_outside == pytest.approx(rep.total, rel=1e-12)
    assert rep.peak_omega == pytest.approx(0.5, abs=0.02)


def test_peak_count_two_strong_tones():
    t = np.arange(0, 60.0001, 0.01)
    rep = time_spectrum(t, tone(t, (1.0, 0.2), (0.8, -0.6)), (0, 60))
    assert rep.peak_count() == 2


def test_spectrum_windows():
    t = np.arange(0, 10.0001, 0.1)
    y = tone(t, (1.0, 0.3))
    with pytest.raises(ValueError):
        time_spectrum(t, y, (0, 10))  # only 101 samples
    t = np.arange(0, 10.0001, 0.01)
    with pytest.raises(ValueError):
        time_spectrum(t, tone(t, (1.0, 0.3)), (5, 12))
    rep = time_spectrum(t, tone(t, (1.0, 0.3)), (5, 10))
    assert rep.window == (5.0, 10.0) and rep.gap == (-1.1, 1.1)
    d = rep.as_dict()
    assert set(d) >= {"massInsideGap", "massOutsideGap", "peakOmega", "outsideFraction", "peakCount"}
