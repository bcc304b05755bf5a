"""Scenario generation and Monte-Carlo experiment harness.

One access point with a uniform linear array serves K single-antenna
devices placed uniformly in a disc.  Channels combine distance path
loss T0 * (d/d0)^(-alpha) with Rician small-scale fading around the
array steering vector.  ``run_experiment`` sweeps antenna or device
counts, runs the configured solvers on each realization, and reports
per-point mean/stderr MSE rows suitable for CSV export.

All randomness flows from explicit seeds; per-realization generators
are derived from (master seed, point index, realization index) so a
table is reproducible regardless of execution order or worker count.
"""

from __future__ import annotations

import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import baselines
from .aircomp import analytic_mse
from .bnb import solve_global

THREADS_ENV = "AIRBEAM_THREADS"


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


def dbm_to_watt(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


@dataclass(frozen=True)
class NetworkScenario:
    """Geometry and radio parameters; dB inputs are converted once here."""

    n_antennas: int = 4
    k_devices: int = 8
    ap_position: tuple[float, float, float] = (0.0, 0.0, 20.0)
    region_center: tuple[float, float, float] = (120.0, 20.0, 0.0)
    region_radius: float = 20.0
    path_loss_exponent: float = 3.0
    ref_loss_db: float = -30.0          # T0 at d0 = 1 m
    rician_factor: float = 3.0
    power_dbm: float = 30.0
    noise_dbm: float = -100.0
    antenna_spacing: float = 0.5        # in wavelengths

    def __post_init__(self):
        if self.n_antennas < 1 or self.k_devices < 1:
            raise ValueError("antenna and device counts must be positive")
        if self.region_radius < 0.0:
            raise ValueError("region radius must be nonnegative")

    @property
    def ref_gain(self) -> float:
        return db_to_linear(self.ref_loss_db)

    @property
    def power(self) -> float:
        return dbm_to_watt(self.power_dbm)

    @property
    def noise_var(self) -> float:
        return dbm_to_watt(self.noise_dbm)


def steering_vector(scenario: NetworkScenario, direction: np.ndarray) -> np.ndarray:
    """ULA response for a unit direction vector from AP to device.

    The array lies along the x axis, so the element phases are
    2*pi*spacing*n times the direction cosine with that axis.
    """
    cos_axis = direction[0]
    n = np.arange(scenario.n_antennas)
    return np.exp(2j * np.pi * scenario.antenna_spacing * n * cos_axis)


def generate_channels(scenario: NetworkScenario, rng_seed) -> np.ndarray:
    """Draw one N x K channel matrix for the scenario.

    Device positions are area-uniform over the disc, path gain is
    T0 * d^(-alpha), and small-scale fading is Rician:

        h_k = sqrt(gain) * (sqrt(beta/(1+beta)) * a(theta_k)
                            + sqrt(1/(1+beta)) * g_k),  g_k ~ CN(0, I).
    """
    rng = np.random.default_rng(rng_seed)
    N, K = scenario.n_antennas, scenario.k_devices
    beta = scenario.rician_factor

    radii = scenario.region_radius * np.sqrt(rng.random(K))
    angles = rng.random(K) * 2.0 * np.pi
    center = np.asarray(scenario.region_center)
    ap = np.asarray(scenario.ap_position)

    H = np.empty((N, K), dtype=complex)
    for k in range(K):
        pos = center + np.array([radii[k] * np.cos(angles[k]),
                                 radii[k] * np.sin(angles[k]), 0.0])
        delta = pos - ap
        dist = float(np.linalg.norm(delta))
        gain = scenario.ref_gain * dist ** (-scenario.path_loss_exponent)
        los = steering_vector(scenario, delta / dist)
        nlos = (rng.standard_normal(N) + 1j * rng.standard_normal(N)) / np.sqrt(2.0)
        h = np.sqrt(beta / (1.0 + beta)) * los + np.sqrt(1.0 / (1.0 + beta)) * nlos
        H[:, k] = np.sqrt(gain) * h
    return H


@dataclass
class ExperimentConfig:
    """One sweep: axis, realizations per point, solvers, master seed."""

    sweep: str                              # "antennas" or "devices"
    values: tuple[int, ...]
    realizations: int = 500
    eps: float = 1e-5
    solvers: tuple[str, ...] = ("bnb", "sca", "sdr")
    seed: int = 0
    scenario: NetworkScenario = field(default_factory=NetworkScenario)

    def __post_init__(self):
        if self.sweep not in ("antennas", "devices"):
            raise ValueError("sweep must be 'antennas' or 'devices'")
        self.values = tuple(int(v) for v in self.values)
        if not self.values or any(v < 1 for v in self.values):
            raise ValueError("axis values must be positive")
        if self.realizations < 1:
            raise ValueError("realizations must be at least 1")
        unknown = set(self.solvers) - set(SOLVERS)
        if unknown:
            raise ValueError(f"unknown solvers: {sorted(unknown)}")

    def scenario_at(self, value: int) -> NetworkScenario:
        if self.sweep == "antennas":
            return replace(self.scenario, n_antennas=value)
        return replace(self.scenario, k_devices=value)


def _run_bnb(H, eps, rng):
    report = solve_global(H, eps=eps)
    return report.optimal_m, report.iterations

def _run_sca(H, eps, rng):
    result = baselines.sca_beamformer(H)
    return result.m, result.rounds

def _run_sdr(H, eps, rng):
    seed = int(rng.integers(2 ** 63)) if rng is not None else None
    result = baselines.sdr_beamformer(H, rng_seed=seed)
    return result.m, result.newton_iters

def _run_mf(H, eps, rng):
    return baselines.matched_filter_beamformer(H), 0


SOLVERS = {"bnb": _run_bnb, "sca": _run_sca, "sdr": _run_sdr, "mf": _run_mf}

RESULT_COLUMNS = ("axis_value", "solver", "mean_mse", "stderr_mse",
                  "mean_iterations", "mean_walltime_ms", "failures")


def _one_realization(cfg: ExperimentConfig, point_index: int, realization: int):
    """All configured solvers on one channel draw; independent work item."""
    scenario = cfg.scenario_at(cfg.values[point_index])
    seed_seq = np.random.SeedSequence([cfg.seed, point_index, realization])
    channel_seed, solver_seed = seed_seq.spawn(2)
    H = generate_channels(scenario, channel_seed)
    out = {}
    for name in cfg.solvers:
        rng = np.random.default_rng(solver_seed)
        start = time.perf_counter()
        try:
            m, iters = SOLVERS[name](H, cfg.eps, rng)
            elapsed_ms = (time.perf_counter() - start) * 1e3
            mse = analytic_mse(m, H, scenario.power, scenario.noise_var)
            out[name] = (mse, iters, elapsed_ms)
        except Exception:
            out[name] = None
    return out


def worker_count() -> int:
    """Worker cap from the AIRBEAM_THREADS environment variable.

    0 or 1 (and unset) mean single-threaded deterministic execution.
    """
    raw = os.environ.get(THREADS_ENV, "0")
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"{THREADS_ENV} must be an integer, got {raw!r}")
    return max(n, 0)


def run_experiment(cfg: ExperimentConfig) -> list[dict]:
    """Run the full sweep and aggregate one row per (axis value, solver).

    Per-realization solver failures are excluded from the averages and
    surfaced in the ``failures`` column, never silently averaged.
    """
    jobs = [(p, r) for p in range(len(cfg.values)) for r in range(cfg.realizations)]
    workers = worker_count()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda j: _one_realization(cfg, *j), jobs))
    else:
        results = [_one_realization(cfg, p, r) for p, r in jobs]

    rows = []
    for p, value in enumerate(cfg.values):
        point = [results[i] for i, (pi, _) in enumerate(jobs) if pi == p]
        for name in cfg.solvers:
            samples = [res[name] for res in point if res[name] is not None]
            failures = len(point) - len(samples)
            if samples:
                mses = np.array([s[0] for s in samples])
                iters = np.array([s[1] for s in samples], dtype=float)
                times = np.array([s[2] for s in samples])
                stderr = float(mses.std(ddof=1) / np.sqrt(len(mses))) if len(mses) > 1 else 0.0
                row = dict(axis_value=value, solver=name,
                           mean_mse=float(mses.mean()), stderr_mse=stderr,
                           mean_iterations=float(iters.mean()),
                           mean_walltime_ms=float(times.mean()),
                           failures=failures)
            else:
                row = dict(axis_value=value, solver=name, mean_mse=float("nan"),
                           stderr_mse=float("nan"), mean_iterations=float("nan"),
                           mean_walltime_ms=float("nan"), failures=failures)
            rows.append(row)
    return rows


def write_result_csv(rows: list[dict], path):
    """Comma-separated table with the fixed RESULT_COLUMNS header."""
    with open(path, "w") as fh:
        fh.write(",".join(RESULT_COLUMNS) + "\n")
        for row in rows:
            fh.write(",".join(repr(row[c]) if isinstance(row[c], float) else str(row[c])
                              for c in RESULT_COLUMNS) + "\n")
