# cprsutils/hydro/cli/__main__.py
from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import List, Optional

import numpy as np

from cprsutils import paths
from cprsutils.hydro.config.experiment_spec import ExperimentSpec, load_spec
from cprsutils.hydro.coupling.discrepancy import discrepancy_h
from cprsutils.hydro.coupling.kmc import simulate_coupled
from cprsutils.hydro.coupling.pair import CoupledConfiguration
from cprsutils.hydro.engine.events import CountsChecker
from cprsutils.hydro.engine.kmc import simulate
from cprsutils.hydro.errors import AssertionFailure, HydroError, SpecValidationError
from cprsutils.hydro.io.atomic_write import atomic_write_csv
from cprsutils.hydro.io.tables import write_ledger_csv, write_pde_csv
from cprsutils.hydro.logging_utils import configure_logging, get_logger, kv
from cprsutils.hydro.measures.ledger import CurrentLedger
from cprsutils.hydro.measures.profiles import make_profile
from cprsutils.hydro.measures.sampling import sample_product_measure
from cprsutils.hydro.pipeline.experiments import (
    decay_layout,
    lattice_for,
    reference_solution,
    run_experiment,
)
from cprsutils.hydro.pipeline.replicas import derive_seed
from cprsutils.hydro.spectral.duhamel import duhamel_solve
from cprsutils.lattice.core import Geometry
from cprsutils.lattice.snapshot import write_snapshot

log = get_logger(__name__)


def _spec(args: argparse.Namespace) -> ExperimentSpec:
    spec = load_spec(args.spec)
    if args.seed is not None:
        spec = spec.with_overrides(seed=args.seed)
    return spec


def _out(args: argparse.Namespace, spec: ExperimentSpec, sub: str) -> Path:
    out = paths.experiment_path(sub, spec.spec_hash, args.out or spec.out_dir or None)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _comments(spec: ExperimentSpec, seed: int) -> List[str]:
    return [f"spec_hash={spec.spec_hash}", f"seed={seed}"]


def cmd_simulate(args: argparse.Namespace) -> int:
    spec = _spec(args)
    N = args.N or spec.N_grid[0]
    geom = lattice_for(spec, N)
    seed = derive_seed(spec.seed, N)
    init = sample_product_measure(make_profile(spec.profile, spec.b_hat), geom, seed, replica_id=args.replica)
    params = spec.model_params(N)
    ledger = CurrentLedger.empty(geom, params, check_continuity=args.check)
    observers = [ledger] + ([CountsChecker()] if args.check else [])
    out = _out(args, spec, "simulate")
    final = simulate(
        init, params, spec.horizon, seed, observers,
        replica_id=args.replica, event_log=str(out / "events.ndjson") if args.events else None,
    )
    write_snapshot(out / "initial.txt", init)
    write_snapshot(out / "final.txt", final)
    write_ledger_csv(out / "ledger.csv", ledger, spec.horizon, _comments(spec, seed))
    print(out)
    return 0


def cmd_pde(args: argparse.Namespace) -> int:
    spec = _spec(args)
    traj = reference_solution(spec)
    out = _out(args, spec, "pde")
    write_pde_csv(out / "pde.csv", traj.states, _comments(spec, spec.seed))
    print(out)
    return 0


def cmd_spectral(args: argparse.Namespace) -> int:
    spec = _spec(args)
    if spec.d != 1:
        raise SpecValidationError("the spectral solver covers d=1 only")
    sol = duhamel_solve(
        make_profile(spec.profile, spec.b_hat), spec.b_hat, spec.model_params(1), spec.horizon,
        M_modes=spec.M_modes, picard=spec.picard, tol=spec.tol, window=spec.window,
    )
    n = int(round(2.0 / spec.h))
    u = np.linspace(-1.0, 1.0, n + 1)
    rows = []
    for t in (0.0,) + spec.times:
        vals = sol.evaluate(t, u)
        rows.extend((t, float(x), *(float(v) for v in row)) for x, row in zip(u, vals))
    out = _out(args, spec, "spectral")
    atomic_write_csv(out / "spectral.csv", ("t", "u1", "rho1", "rho2", "rho3"), rows, _comments(spec, spec.seed))
    print(out)
    return 0


def _run(spec: ExperimentSpec, args: argparse.Namespace) -> int:
    report = run_experiment(spec, out_dir=args.out, threads=args.threads)
    print(report.out_dir)
    if not report.passed:
        for name in report.failed():
            print(f"FAILED {name}", file=sys.stderr)
        return 1
    return 0


def cmd_compare(args: argparse.Namespace) -> int:
    return _run(_spec(args).with_overrides(kind="pde-compare"), args)


def cmd_oracle(args: argparse.Namespace) -> int:
    return _run(_spec(args).with_overrides(kind="oracle-check"), args)


def cmd_experiment(args: argparse.Namespace) -> int:
    return _run(_spec(args), args)


def cmd_couple(args: argparse.Namespace) -> int:
    spec = _spec(args)
    N = args.N or spec.N_grid[0]
    M, L = decay_layout(spec, N)
    geom = Geometry(d=spec.d, N=N, transverse_len=L, boundary_mode=spec.boundary_mode)
    seed = derive_seed(spec.seed, N)
    init = sample_product_measure(make_profile(spec.profile, spec.b_hat), geom, seed, replica_id=args.replica)
    final = simulate_coupled(
        CoupledConfiguration.diagonal(init, M), spec.model_params(N), spec.horizon, seed, replica_id=args.replica
    )
    out = _out(args, spec, "couple")
    write_snapshot(out / "left.txt", final.left)
    write_snapshot(out / "right.txt", final.right)
    rows = [(N, M, spec.horizon, i, discrepancy_h(final, i)) for i in (1, 2, 3)]
    atomic_write_csv(out / "discrepancy.csv", ("N", "M", "t", "type", "h"), rows, _comments(spec, seed))
    print(out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cprs", description="Contact process with random slowdowns: simulation and limit solvers.")
    p.add_argument("--log-level", type=str, default=None, help="DEBUG, INFO, WARNING (default: $CPRS_LOG_LEVEL or WARNING)")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp: argparse.ArgumentParser) -> None:
        sp.add_argument("--spec", type=str, required=True, help="Experiment spec file (key = value lines).")
        sp.add_argument("--out", type=str, default=None, help="Output directory (default: outputs/experiments).")
        sp.add_argument("--seed", type=int, default=None, help="Override the spec's base seed.")
        sp.add_argument("--threads", type=int, default=1, help="Worker processes for replicas.")

    sp = sub.add_parser("simulate", help="One KMC path with current ledger and snapshots.")
    common(sp)
    sp.add_argument("--N", type=int, default=None, help="Scaling parameter (default: first of N_grid).")
    sp.add_argument("--replica", type=int, default=0)
    sp.add_argument("--events", action="store_true", help="Write an NDJSON event log.")
    sp.add_argument("--check", action="store_true", help="Assert count and continuity identities after every event.")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("pde", help="Finite-difference solution at the snapshot times.")
    common(sp)
    sp.set_defaults(func=cmd_pde)

    sp = sub.add_parser("spectral", help="Spectral Duhamel solution (d=1).")
    common(sp)
    sp.set_defaults(func=cmd_spectral)

    sp = sub.add_parser("compare", help="Finite-difference vs spectral cross-check and weak residuals.")
    common(sp)
    sp.set_defaults(func=cmd_compare)

    sp = sub.add_parser("couple", help="One coupled (restricted, full) path and its discrepancy.")
    common(sp)
    sp.add_argument("--N", type=int, default=None)
    sp.add_argument("--replica", type=int, default=0)
    sp.set_defaults(func=cmd_couple)

    sp = sub.add_parser("oracle", help="Simulated law vs exact transient distribution on a tiny lattice.")
    common(sp)
    sp.set_defaults(func=cmd_oracle)

    sp = sub.add_parser("experiment", help="Run the experiment the spec describes.")
    common(sp)
    sp.set_defaults(func=cmd_experiment)
    return p


def main(argv: Optional[List[str]] = None) -> None:
    args = build_parser().parse_args(argv)
    configure_logging(args.log_level)
    paths.ensure_dirs()
    try:
        code = args.func(args)
    except AssertionFailure as e:
        print(f"assertion failed: {e}", file=sys.stderr)
        code = 1
    except SpecValidationError as e:
        print(f"invalid spec: {e}", file=sys.stderr)
        code = 2
    except HydroError as e:
        log.error(kv("run_failed", error=type(e).__name__, message=str(e)))
        print(f"{type(e).__name__}: {e}", file=sys.stderr)
        code = 1
    raise SystemExit(code)


if __name__ == "__main__":
    main()
