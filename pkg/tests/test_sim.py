import numpy as np
import pytest

from airbeam.sim import (
    ExperimentConfig,
    NetworkScenario,
    RESULT_COLUMNS,
    dbm_to_watt,
    generate_channels,
    run_experiment,
    write_result_csv,
    _one_realization,
)


def test_unit_conversions():
    sc = NetworkScenario()
    assert sc.power == pytest.approx(1.0)          # 30 dBm
    assert sc.noise_var == pytest.approx(1e-13)    # -100 dBm
    assert sc.ref_gain == pytest.approx(1e-3)      # -30 dB
    assert dbm_to_watt(0.0) == pytest.approx(1e-3)


def test_center_device_distance_and_gain():
    # radius 0 pins the device at the region centre:
    # d = sqrt(120^2 + 20^2 + 20^2) ~ 123.288 m, gain = 1e-3 * d^-3
    sc = NetworkScenario(n_antennas=4, k_devices=1, region_radius=0.0,
                         rician_factor=1e9)
    H = generate_channels(sc, rng_seed=0)
    d = np.sqrt(120.0 ** 2 + 20.0 ** 2 + 20.0 ** 2)
    assert d == pytest.approx(123.288, abs=5e-4)
    gain = 1e-3 * d ** -3
    assert gain == pytest.approx(5.34e-10, rel=2e-3)
    # enormous Rician factor leaves only the unit-modulus steering part
    assert np.linalg.norm(H[:, 0]) ** 2 == pytest.approx(4 * gain, rel=1e-4)


def test_average_channel_power():
    sc = NetworkScenario(n_antennas=3, k_devices=2, region_radius=0.0)
    d = np.sqrt(120.0 ** 2 + 20.0 ** 2 + 20.0 ** 2)
    expected = 3 * 1e-3 * d ** -3
    draws = [np.abs(generate_channels(sc, rng_seed=s)) ** 2 for s in range(2500)]
    mean_power = np.mean([d.sum(axis=0) for d in draws])
    assert mean_power == pytest.approx(expected, rel=0.03)


def test_large_rician_factor_recovers_steering_vector():
    sc = NetworkScenario(n_antennas=6, k_devices=1, rician_factor=1e6)
    H = generate_channels(sc, rng_seed=3)
    h = H[:, 0] / np.linalg.norm(H[:, 0])
    # compare against a pure line-of-sight draw with the same geometry
    sc_los = NetworkScenario(n_antennas=6, k_devices=1, rician_factor=1e15)
    g = generate_channels(sc_los, rng_seed=3)[:, 0]
    g = g / np.linalg.norm(g)
    assert abs(np.vdot(h, g)) > 0.999


def test_channels_deterministic_in_seed():
    sc = NetworkScenario(n_antennas=2, k_devices=3)
    a = generate_channels(sc, rng_seed=5)
    b = generate_channels(sc, rng_seed=5)
    assert np.array_equal(a, b)
    c = generate_channels(sc, rng_seed=6)
    assert not np.array_equal(a, c)


def test_config_validation():
    with pytest.raises(ValueError):
        ExperimentConfig(sweep="bogus", values=(2,))
    with pytest.raises(ValueError):
        ExperimentConfig(sweep="antennas", values=())
    with pytest.raises(ValueError):
        ExperimentConfig(sweep="antennas", values=(4,), solvers=("nope",))
    cfg = ExperimentConfig(sweep="devices", values=(2, 4))
    assert cfg.scenario_at(4).k_devices == 4


def _tiny_config(**kw):
    defaults = dict(
        sweep="antennas", values=(2, 3), realizations=2, eps=1e-3,
        solvers=("bnb", "sca", "mf"), seed=7,
        scenario=NetworkScenario(n_antennas=2, k_devices=2),
    )
    defaults.update(kw)
    return ExperimentConfig(**defaults)


def test_run_experiment_deterministic_and_well_formed(tmp_path):
    cfg = _tiny_config()
    rows1 = run_experiment(cfg)
    rows2 = run_experiment(_tiny_config())
    assert rows1 == rows2
    assert len(rows1) == len(cfg.values) * len(cfg.solvers)
    for row in rows1:
        assert set(row) == set(RESULT_COLUMNS)
        assert row["failures"] == 0
        assert row["mean_mse"] > 0.0
    out = tmp_path / "table.csv"
    write_result_csv(rows1, out)
    lines = out.read_text().splitlines()
    assert lines[0] == ",".join(RESULT_COLUMNS)
    assert len(lines) == 1 + len(rows1)
    # identical reruns produce identical files
    out2 = tmp_path / "table2.csv"
    write_result_csv(run_experiment(_tiny_config()), out2)
    assert out.read_text() == out2.read_text()


def test_rowwise_solver_ordering():
    # the certified solver never loses to a baseline on the same draw
    cfg = _tiny_config(realizations=3, eps=1e-4)
    for p in range(len(cfg.values)):
        for r in range(cfg.realizations):
            out = _one_realization(cfg, p, r)
            assert all(v is not None for v in out.values())
            assert out["bnb"][0] <= out["sca"][0] * (1.0 + 1e-7)
            assert out["bnb"][0] <= out["mf"][0] * (1.0 + 1e-7)


def test_parallel_mode_matches_serial(monkeypatch):
    cfg = _tiny_config()
    serial = run_experiment(cfg)
    monkeypatch.setenv("AIRBEAM_THREADS", "2")
    parallel = run_experiment(_tiny_config())
    assert serial == parallel


def test_bad_thread_env(monkeypatch):
    monkeypatch.setenv("AIRBEAM_THREADS", "many")
    with pytest.raises(ValueError):
        run_experiment(_tiny_config())
