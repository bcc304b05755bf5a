import numpy as np
import pytest

from airbeam.aircomp import (
    AirCompDesign,
    analytic_mse,
    denoising_factor,
    empirical_mse,
    transmit_scalars,
)
from airbeam.bnb import solve_global
from airbeam.sim import NetworkScenario, generate_channels


def test_denoising_factor_example():
    H = np.array([[2.0, 1.0], [0.0, 1.0]], dtype=complex)
    m = np.array([1.0, 0.0], dtype=complex)
    assert denoising_factor(m, H, power=1.0) == pytest.approx(1.0)


def test_denoising_factor_scales_quadratically():
    rng = np.random.default_rng(0)
    H = rng.standard_normal((3, 4)) + 1j * rng.standard_normal((3, 4))
    m = rng.standard_normal(3) + 1j * rng.standard_normal(3)
    eta = denoising_factor(m, H, 2.0)
    assert denoising_factor(3.0 * m, H, 2.0) == pytest.approx(9.0 * eta)


def test_feasible_beamformer_gives_eta_at_least_power():
    H = generate_channels(NetworkScenario(n_antennas=2, k_devices=3), rng_seed=1)
    report = solve_global(H, eps=1e-4)
    eta = denoising_factor(report.optimal_m, H, power=1.0)
    assert eta >= 1.0 - 1e-9


def test_transmit_scalar_example():
    # m^H h = 2 and eta = 4 give w = 1
    H = np.array([[2.0]], dtype=complex)
    m = np.array([1.0], dtype=complex)
    w = transmit_scalars(m, H, eta=4.0)
    assert w[0] == pytest.approx(1.0)


def test_alignment_identity_and_power_budget():
    rng = np.random.default_rng(5)
    for _ in range(20):
        H = rng.standard_normal((3, 5)) + 1j * rng.standard_normal((3, 5))
        m = rng.standard_normal(3) + 1j * rng.standard_normal(3)
        P = rng.uniform(0.5, 3.0)
        eta = denoising_factor(m, H, P)
        w = transmit_scalars(m, H, eta)
        aligned = (m.conj() @ H) * w / np.sqrt(eta)
        assert np.allclose(aligned, 1.0, atol=1e-12)
        assert np.all(np.abs(w) ** 2 <= P * (1.0 + 1e-9))
        # the device attaining the min transmits at full power
        k = int(np.argmin(np.abs(m.conj() @ H)))
        assert abs(w[k]) ** 2 == pytest.approx(P, rel=1e-9)


def test_analytic_mse_example_and_scale_invariance():
    H = np.array([[1.0], [1.0]], dtype=complex)
    m = np.array([1.0, 1.0], dtype=complex) / np.sqrt(2) * np.sqrt(2)
    # ||m||^2 = 2, min |m^H h|^2 = 4 -> eta = 4, mse = 0.1*2/4
    assert analytic_mse(m, H, power=1.0, noise_var=0.1) == pytest.approx(0.05)
    z = 0.3 - 1.7j
    assert analytic_mse(z * m, H, 1.0, 0.1) == pytest.approx(0.05)


def test_mse_matches_rescaled_norm_form():
    # mse = sigma^2/P * ||m / min_k |m^H h_k|||^2 for any feasible m
    rng = np.random.default_rng(7)
    H = rng.standard_normal((4, 3)) + 1j * rng.standard_normal((4, 3))
    for _ in range(10):
        m = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        m = m / np.min(np.abs(m.conj() @ H)) * rng.uniform(1.0, 2.0)
        sigma2, P = 0.2, 1.5
        m_tight = m / np.min(np.abs(m.conj() @ H))
        expected = sigma2 / P * float(np.vdot(m_tight, m_tight).real)
        assert analytic_mse(m, H, P, sigma2) == pytest.approx(expected, rel=1e-12)


def _random_design(seed, n=3, k=4, power=1.0, noise_var=0.05):
    rng = np.random.default_rng(seed)
    H = rng.standard_normal((n, k)) + 1j * rng.standard_normal((n, k))
    m = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    return AirCompDesign.from_beamformer(m, H, power, noise_var), H


def test_design_validates():
    design, H = _random_design(3)
    design.validate(H)


def test_empirical_mse_zero_noise_is_exact():
    design, H = _random_design(11, noise_var=0.0)
    mse = empirical_mse(design, H, trials=1000, rng_seed=0)
    assert mse <= 1e-24  # perfect alignment; roundoff only


def test_empirical_mse_concentrates_on_analytic():
    design, H = _random_design(13)
    analytic = design.mse(H)
    est = empirical_mse(design, H, trials=10 ** 5, rng_seed=42)
    assert est == pytest.approx(analytic, rel=0.02)


def test_empirical_mse_linear_in_noise_power():
    design, H = _random_design(17, noise_var=0.04)
    double = AirCompDesign(design.m, design.eta, design.w, design.power, 0.08)
    a = empirical_mse(design, H, trials=20000, rng_seed=5)
    b = empirical_mse(double, H, trials=20000, rng_seed=5)
    # same seed reuses the noise draws, so the ratio is essentially exact
    assert b / a == pytest.approx(2.0, rel=1e-9)


def test_empirical_mse_unbiased_alignment():
    # sample mean of (g_hat - g) vanishes under the closed-form design
    design, H = _random_design(19)
    rng = np.random.default_rng(3)
    K = H.shape[1]
    trials = 20000
    s = (rng.standard_normal((K, trials)) + 1j * rng.standard_normal((K, trials))) / np.sqrt(2)
    noise = (rng.standard_normal((H.shape[0], trials)) + 1j * rng.standard_normal((H.shape[0], trials)))
    noise *= np.sqrt(design.noise_var / 2.0)
    g_hat = ((design.m.conj() @ H) * design.w) @ s / np.sqrt(design.eta)
    g_hat = g_hat + design.m.conj() @ noise / np.sqrt(design.eta)
    g = s.sum(axis=0)
    bias = np.abs(np.mean(g_hat - g))
    scale = np.sqrt(design.mse(H) / trials)
    assert bias <= 4.0 * scale


def test_transmit_scalars_reject_zero_gain():
    H = np.array([[1.0, 0.0], [0.0, 1.0]], dtype=complex)
    m = np.array([1.0, 0.0], dtype=complex)
    with pytest.raises(ValueError, match="zero effective channel"):
        transmit_scalars(m, H, eta=1.0)


def test_trials_validation():
    design, H = _random_design(23)
    with pytest.raises(ValueError):
        empirical_mse(design, H, trials=0, rng_seed=0)
