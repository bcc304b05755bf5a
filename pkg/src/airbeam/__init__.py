"""airbeam: certified-optimal receive beamforming for over-the-air computation.

The central entry point is :func:`solve_global`, a branch-and-bound
solver for

    min ||m||^2   s.t.  |m^H h_k|^2 >= 1  for all devices k,

which certifies its answer to a requested relative gap.  Around it sit
the closed-form transceiver design (``aircomp``), benchmark solvers
(``baselines``), sector-hull geometry (``geometry``), the convex QP
kernel (``numerics``), and a reproducible Monte-Carlo harness
(``sim``).

Quick start::

    import numpy as np
    from airbeam import solve_global, sim

    H = sim.generate_channels(sim.NetworkScenario(n_antennas=4, k_devices=6), rng_seed=0)
    report = solve_global(H, eps=1e-5)
    print(report.objective, report.gap)
"""

from .aircomp import (
    AirCompDesign,
    analytic_mse,
    denoising_factor,
    empirical_mse,
    transmit_scalars,
)
from .baselines import (
    matched_filter_beamformer,
    ScaResult,
    sca_beamformer,
    SdrResult,
    sdr_beamformer,
)
from .bnb import (
    BnBNode,
    BnBStatus,
    iteration_budget,
    node_lower_bound,
    node_upper_bound,
    NodeInfeasible,
    select_branch_device,
    solve_global,
    SolveReport,
    validate_channels,
)
from .geometry import (
    HalfPlane,
    hull_constraints,
    Sector,
    sector_contains,
    feasible_point,
    SectorBox,
    split_box,
)
from .numerics import (
    ConvexQP,
    embed_complex,
    extract_complex,
    least_norm_equality,
    QpSolution,
    QpStatus,
    solve_convex_qp,
)
from .sim import (
    ExperimentConfig,
    generate_channels,
    NetworkScenario,
    run_experiment,
    write_result_csv,
)

__version__ = "0.1.0"

__all__ = [
    "AirCompDesign", "analytic_mse", "denoising_factor", "empirical_mse",
    "transmit_scalars",
    "matched_filter_beamformer", "ScaResult", "sca_beamformer", "SdrResult",
    "sdr_beamformer",
    "BnBNode", "BnBStatus", "iteration_budget", "node_lower_bound",
    "node_upper_bound", "NodeInfeasible", "select_branch_device",
    "solve_global", "SolveReport", "validate_channels",
    "HalfPlane", "hull_constraints", "Sector", "sector_contains",
    "feasible_point", "SectorBox", "split_box",
    "ConvexQP", "embed_complex", "extract_complex", "least_norm_equality",
    "QpSolution", "QpStatus", "solve_convex_qp",
    "ExperimentConfig", "generate_channels", "NetworkScenario",
    "run_experiment", "write_result_csv",
]
