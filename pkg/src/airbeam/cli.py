"""Command-line front end.

Two subcommands:

* ``airbeam solve INSTANCE``  — solve one channel instance with the
  global solver or a baseline and print the transceiver report.
* ``airbeam bench``           — run an antenna- or device-count sweep
  of Monte-Carlo experiments and write the aggregate CSV table.

Instance files are plain text: a header line ``N K``, then N*K lines
``re im`` giving H column by column (all N entries of device 1 first),
then optional ``P <watts>`` and ``sigma2 <watts>`` lines.
"""

from __future__ import annotations

import argparse
import secrets
import sys

import numpy as np

from . import baselines, sim
from .aircomp import AirCompDesign, analytic_mse
from .bnb import BnBStatus, solve_global

DEFAULT_POWER = 1.0          # watts (30 dBm)
DEFAULT_NOISE = 1e-13        # watts (-100 dBm)


class InstanceError(ValueError):
    pass


def read_instance(path):
    """Parse an instance file; returns (H, power, noise_var).

    Raises InstanceError with the offending 1-based line number on any
    malformed content.
    """
    with open(path) as fh:
        lines = fh.read().splitlines()

    def fail(lineno, message):
        raise InstanceError(f"{path}:{lineno}: {message}")

    if not lines:
        fail(1, "empty instance file")
    head = lines[0].split()
    if len(head) != 2:
        fail(1, f"expected header 'N K', got {lines[0]!r}")
    try:
        n, k = int(head[0]), int(head[1])
    except ValueError:
        fail(1, f"non-integer header fields in {lines[0]!r}")
    if n < 1 or k < 1:
        fail(1, f"dimensions must be positive, got N={n} K={k}")

    need = n * k
    if len(lines) < 1 + need:
        fail(len(lines) + 1, f"expected {need} channel entries, found {len(lines) - 1}")
    entries = np.empty(need, dtype=complex)
    for i in range(need):
        lineno = 2 + i
        parts = lines[1 + i].split()
        if len(parts) != 2:
            fail(lineno, f"expected 're im', got {lines[1 + i]!r}")
        try:
            entries[i] = float(parts[0]) + 1j * float(parts[1])
        except ValueError:
            fail(lineno, f"non-numeric channel entry {lines[1 + i]!r}")
    if not np.all(np.isfinite(entries)):
        fail(2, "channel entries must be finite")
    H = entries.reshape((k, n)).T  # column-major: device-major blocks of N

    power, noise = DEFAULT_POWER, DEFAULT_NOISE
    for j, line in enumerate(lines[1 + need:], start=2 + need):
        if not line.strip():
            continue
        parts = line.split()
        if len(parts) != 2 or parts[0] not in ("P", "sigma2"):
            fail(j, f"expected 'P <watts>' or 'sigma2 <watts>', got {line!r}")
        try:
            value = float(parts[1])
        except ValueError:
            fail(j, f"non-numeric value in {line!r}")
        if value <= 0.0 and parts[0] == "P":
            fail(j, "transmit power must be positive")
        if value < 0.0:
            fail(j, "noise variance must be nonnegative")
        if parts[0] == "P":
            power = value
        else:
            noise = value
    return H, power, noise


def write_instance(path, H, power: float | None = None, noise_var: float | None = None):
    """Write H (and optional P / sigma2 lines) in the instance format.

    Floats are written with shortest round-trip repr, so a re-read
    reproduces H bit for bit.
    """
    H = np.asarray(H, dtype=complex)
    n, k = H.shape
    with open(path, "w") as fh:
        fh.write(f"{n} {k}\n")
        for col in range(k):
            for row in range(n):
                v = H[row, col]
                fh.write(f"{v.real!r} {v.imag!r}\n")
        if power is not None:
            fh.write(f"P {power!r}\n")
        if noise_var is not None:
            fh.write(f"sigma2 {noise_var!r}\n")


def _solve_instance(args) -> int:
    try:
        H, power, noise = read_instance(args.instance)
    except (OSError, InstanceError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    seed = args.seed
    if seed is None:
        seed = secrets.randbits(32)
        print(f"seed: {seed}")

    if args.trace and args.solver != "bnb":
        print("error: --trace requires --solver bnb", file=sys.stderr)
        return 2

    try:
        iterations = 0
        gap = None
        trace = None
        if args.solver == "bnb":
            report = solve_global(H, eps=args.eps, max_iter=args.max_iter)
            m = report.optimal_m
            iterations = report.iterations
            gap = report.gap
            trace = report.trace
            if report.status is BnBStatus.ITERATION_CAPPED and not args.allow_capped:
                print("error: iteration cap reached before certification "
                      "(re-run with --allow-capped to accept the bounds)",
                      file=sys.stderr)
                return 3
        elif args.solver == "sdr":
            result = baselines.sdr_beamformer(H, rng_seed=seed)
            m, iterations = result.m, result.newton_iters
        elif args.solver == "sca":
            result = baselines.sca_beamformer(H)
            m, iterations = result.m, result.rounds
        else:
            m = baselines.matched_filter_beamformer(H)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    design = AirCompDesign.from_beamformer(m, H, power, noise)
    gains = np.abs(m.conj() @ H)
    print(f"solver: {args.solver}")
    print(f"objective ||m||^2: {float(np.vdot(m, m).real):.10g}")
    print(f"analytic MSE: {analytic_mse(m, H, power, noise):.10g}")
    print(f"eta: {design.eta:.10g}")
    for k in range(H.shape[1]):
        print(f"device {k}: |m^H h|={gains[k]:.10g} |w|^2={abs(design.w[k]) ** 2:.10g}")
    print(f"iterations: {iterations}")
    if gap is not None:
        print(f"certified gap: {gap:.3e}")

    if args.trace:
        try:
            with open(args.trace, "w") as fh:
                fh.write("t,L,U\n")
                for t, (low, up) in enumerate(trace):
                    fh.write(f"{t},{low!r},{up!r}\n")
        except OSError as exc:
            print(f"error: cannot write trace: {exc}", file=sys.stderr)
            return 2
    return 0


def _bench(args) -> int:
    seed = args.seed
    if seed is None:
        seed = secrets.randbits(32)
        print(f"seed: {seed}")
    try:
        values = tuple(int(v) for v in args.values.split(","))
    except ValueError:
        print(f"error: --values must be comma-separated integers, got {args.values!r}",
              file=sys.stderr)
        return 2
    if args.sweep == "antennas":
        scenario = sim.NetworkScenario(k_devices=args.k)
    else:
        scenario = sim.NetworkScenario(n_antennas=args.n)
    try:
        cfg = sim.ExperimentConfig(
            sweep=args.sweep, values=values, realizations=args.realizations,
            eps=args.eps, solvers=tuple(args.solvers.split(",")),
            seed=seed, scenario=scenario,
        )
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    rows = sim.run_experiment(cfg)
    try:
        sim.write_result_csv(rows, args.out)
    except OSError as exc:
        print(f"error: cannot write {args.out}: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {len(rows)} rows to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="airbeam",
        description="Certified-optimal receive beamforming for over-the-air computation",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    solve = sub.add_parser("solve", help="solve one instance file")
    solve.add_argument("instance", help="path to the instance file")
    solve.add_argument("--eps", type=float, default=1e-5,
                       help="relative optimality tolerance (default 1e-5)")
    solve.add_argument("--max-iter", type=int, default=None,
                       help="iteration cap (default: min(budget, 1e6))")
    solve.add_argument("--solver", choices=("bnb", "sdr", "sca", "mf"), default="bnb")
    solve.add_argument("--trace", default=None, metavar="PATH",
                       help="write per-iteration 't,L,U' rows (bnb only)")
    solve.add_argument("--seed", type=int, default=None)
    solve.add_argument("--allow-capped", action="store_true",
                       help="exit 0 even when the iteration cap is hit")
    solve.set_defaults(func=_solve_instance)

    bench = sub.add_parser("bench", help="run a Monte-Carlo sweep")
    bench.add_argument("--sweep", choices=("antennas", "devices"), required=True)
    bench.add_argument("--values", required=True,
                       help="comma-separated axis values, e.g. 4,6,8,10")
    bench.add_argument("--k", type=int, default=10,
                       help="device count for antenna sweeps (default 10)")
    bench.add_argument("--n", type=int, default=10,
                       help="antenna count for device sweeps (default 10)")
    bench.add_argument("--realizations", type=int, default=500)
    bench.add_argument("--eps", type=float, default=1e-5)
    bench.add_argument("--solvers", default="bnb,sca,sdr",
                       help="comma-separated subset of bnb,sca,sdr,mf")
    bench.add_argument("--seed", type=int, default=None)
    bench.add_argument("--out", required=True, metavar="PATH")
    bench.set_defaults(func=_bench)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
