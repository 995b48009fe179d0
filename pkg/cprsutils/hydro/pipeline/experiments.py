# cprsutils/hydro/pipeline/experiments.py
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Callable, Dict, List, Sequence, Tuple

import numpy as np

from cprsutils import paths
from cprsutils.hydro.config.experiment_spec import ExperimentSpec, parse_rates
from cprsutils.hydro.config.model_params import BoundaryProfile, ModelParams
from cprsutils.hydro.coupling.discrepancy import discrepancy_total
from cprsutils.hydro.coupling.kmc import simulate_coupled
from cprsutils.hydro.coupling.pair import CoupledConfiguration, default_box_M
from cprsutils.hydro.coupling.rates import check_marginal_fidelity
from cprsutils.hydro.engine.kmc import KmcEngine, simulate
from cprsutils.hydro.errors import AssertionFailure, SpecValidationError
from cprsutils.hydro.io.atomic_write import atomic_write_csv, atomic_write_json
from cprsutils.hydro.io.tables import write_decay_csv
from cprsutils.hydro.logging_utils import get_logger, kv
from cprsutils.hydro.measures.ledger import (
    MARTINGALE_CHANNELS,
    MARTINGALE_CSV_HEADER,
    CurrentLedger,
    MartingaleCentering,
    add_martingale_sums,
    martingale_sums,
)
from cprsutils.hydro.measures.pairing import creation_pairing, current_pairing, empirical_pairing
from cprsutils.hydro.measures.profiles import make_profile
from cprsutils.hydro.measures.sampling import sample_product_measure
from cprsutils.hydro.measures.test_functions import parse_triple, parse_vector_triple
from cprsutils.hydro.pde.ftcs import (
    PdeTrajectory,
    TimeIntegral,
    flux_pairing,
    pde_pairing,
    reaction_pairing,
    solve_pde,
)
from cprsutils.hydro.pde.weak_form import WeakResidualMonitor
from cprsutils.hydro.rates.generator import build_generator, point_mass, total_variation, transient_distribution
from cprsutils.hydro.spectral.duhamel import duhamel_solve
from cprsutils.lattice.core import Configuration, Geometry

from .replicas import chunk_ranges, derive_seed, run_tasks

log = get_logger(__name__)


@dataclass(frozen=True)
class ExperimentReport:
    kind: str
    spec_hash: str
    out_dir: str
    files: Tuple[str, ...]
    assertions: Dict[str, bool] = field(default_factory=dict)
    results: Dict[str, Any] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(self.assertions.values())

    def failed(self) -> List[str]:
        return [k for k, ok in self.assertions.items() if not ok]

    def raise_on_failure(self) -> None:
        if not self.passed:
            raise AssertionFailure(f"{self.kind}: failed checks: {', '.join(self.failed())}")

    def to_dict(self) -> Dict[str, Any]:
        return {
            "kind": self.kind,
            "spec_hash": self.spec_hash,
            "out_dir": self.out_dir,
            "files": list(self.files),
            "assertions": dict(self.assertions),
            "passed": self.passed,
            "results": self.results,
        }


# ------------------------
# shared helpers


def _comments(spec: ExperimentSpec) -> List[str]:
    return [f"spec_hash={spec.spec_hash}", f"kind={spec.kind}", f"seed={spec.seed}"]


def _mean_stderr(x: np.ndarray) -> Tuple[float, float]:
    x = np.asarray(x, dtype=float)
    if x.size < 2:
        return float(x.mean()), 0.0
    return float(x.mean()), float(x.std(ddof=1) / math.sqrt(x.size))


def _decreasing(values: Sequence[float]) -> bool:
    return all(b < a for a, b in zip(values, values[1:]))


def _transverse_len(spec: ExperimentSpec, N: int) -> int:
    if spec.d == 1:
        return 1
    L = spec.transverse_period * N
    if abs(L - round(L)) > 1e-9 or round(L) < 3:
        raise SpecValidationError(
            f"transverse_period * N must be an integer >= 3, got {spec.transverse_period} * {N}"
        )
    return int(round(L))


def lattice_for(spec: ExperimentSpec, N: int) -> Geometry:
    return Geometry(d=spec.d, N=N, transverse_len=_transverse_len(spec, N), boundary_mode=spec.boundary_mode)


def reference_solution(spec: ExperimentSpec, monitors=(), h: float | None = None) -> PdeTrajectory:
    return solve_pde(
        make_profile(spec.profile, spec.b_hat),
        spec.b_hat,
        spec.model_params(1),
        spec.horizon,
        spec.h if h is None else h,
        spec.dt if h is None else None,
        d=spec.d,
        mode=spec.boundary_mode,
        transverse_period=spec.transverse_period if spec.d == 2 else 2.0,
        snapshot_times=spec.times,
        monitors=monitors,
    )


def _seeds(spec: ExperimentSpec) -> Dict[int, int]:
    return {N: derive_seed(spec.seed, N) for N in spec.N_grid}


# ------------------------
# hydro-converge


def _hydro_task(task) -> np.ndarray:
    spec, N, seed, rid = task
    geom = lattice_for(spec, N)
    profile = make_profile(spec.profile, spec.b_hat)
    tests = [parse_triple(s) for s in spec.test_functions]
    init = sample_product_measure(profile, geom, seed, replica_id=rid)
    engine = KmcEngine(init, spec.model_params(N), seed=seed, replica_id=rid)
    out = np.empty((len(spec.times), len(tests)))
    for k, t in enumerate(spec.times):
        config = engine.advance_to(t)
        for j, G in enumerate(tests):
            out[k, j] = empirical_pairing(config, G, t)
    engine.finish()
    return out


def _run_hydro(spec: ExperimentSpec, out: Path, threads: int):
    traj = reference_solution(spec)
    tests = [parse_triple(s) for s in spec.test_functions]
    ref = np.array([[pde_pairing(traj.at(t), G) for G in tests] for t in spec.times])

    seeds = _seeds(spec)
    tasks = [(spec, N, seeds[N], rid) for N in spec.N_grid for rid in range(spec.replicas)]
    results = run_tasks(_hydro_task, tasks, threads)

    rows = []
    mean_err: Dict[Tuple[int, int, int], float] = {}
    for a, N in enumerate(spec.N_grid):
        emp = np.stack(results[a * spec.replicas:(a + 1) * spec.replicas])  # (R, times, tests)
        err = np.abs(emp - ref[None])
        for k, t in enumerate(spec.times):
            for j, name in enumerate(spec.test_functions):
                m, se = _mean_stderr(err[:, k, j])
                mean_err[(a, k, j)] = m
                rows.append((N, t, name, m, se, float(emp[:, k, j].mean()), float(ref[k, j])))

    header = ("N", "t", "test_function", "mean_error", "stderr", "mean_empirical", "pde_value")
    atomic_write_csv(out / "hydro_converge.csv", header, rows, _comments(spec))

    checks: Dict[str, bool] = {}
    last = len(spec.N_grid) - 1
    for k, t in enumerate(spec.times):
        for j, name in enumerate(spec.test_functions):
            series = [mean_err[(a, k, j)] for a in range(len(spec.N_grid))]
            if len(series) > 1:
                checks[f"decreasing_in_N[t={t!r},G={name}]"] = _decreasing(series)
            checks[f"below_max_error[t={t!r},G={name}]"] = mean_err[(last, k, j)] < spec.max_error
    return ["hydro_converge.csv"], checks, {"seeds": {str(k): v for k, v in seeds.items()}}


# ------------------------
# currents-lln


def _current_tests(spec: ExperimentSpec):
    G_vec = parse_vector_triple(spec.current_test, spec.d)
    H_hat = parse_triple(spec.creation_test)
    if any(c.decay for G in G_vec for c in G.components) or any(H.decay for H in H_hat):
        raise SpecValidationError("current and creation test functions must be time independent")
    return G_vec, H_hat


def _currents_task(task) -> Tuple[float, float]:
    spec, N, seed, rid = task
    geom = lattice_for(spec, N)
    G_vec, H_hat = _current_tests(spec)
    init = sample_product_measure(make_profile(spec.profile, spec.b_hat), geom, seed, replica_id=rid)
    ledger = CurrentLedger.empty(geom)
    T = spec.horizon
    simulate(init, spec.model_params(N), T, seed, [ledger], replica_id=rid)
    return current_pairing(ledger, G_vec, T), creation_pairing(ledger, H_hat, T, "bulk")


def _martingale_task(task) -> Dict[str, np.ndarray]:
    spec, seed, start, stop = task
    geom = _oracle_geometry(spec)
    params = spec.model_params(spec.oracle_N)
    init = _oracle_init(spec, geom)
    T = spec.horizon
    total = None
    for rid in range(start, stop):
        ledger = CurrentLedger.empty(geom, params)
        simulate(init, params, T, seed, [ledger], replica_id=rid)
        total = add_martingale_sums(total, martingale_sums(ledger, T))
    return total


def martingale_centering(spec: ExperimentSpec, threads: int = 1) -> MartingaleCentering:
    """W and Q martingales at the horizon over martingale_replicas runs on the oracle lattice."""
    seed = derive_seed(spec.seed, 0)
    tasks = [(spec, seed, a, b) for a, b in chunk_ranges(spec.martingale_replicas)]
    total = None
    for part in run_tasks(_martingale_task, tasks, threads):
        total = add_martingale_sums(total, part)
    return MartingaleCentering.from_sums(total, spec.martingale_replicas)


def _run_currents(spec: ExperimentSpec, out: Path, threads: int):
    G_vec, H_hat = _current_tests(spec)
    params = spec.model_params(1)
    flux = TimeIntegral(lambda s: flux_pairing(s, G_vec))
    react = TimeIntegral(lambda s: reaction_pairing(s, H_hat, params) if params.reaction_on else 0.0)
    reference_solution(spec, monitors=(flux, react))
    ref = {"W": flux.value, "Q": react.value}

    seeds = _seeds(spec)
    tasks = [(spec, N, seeds[N], rid) for N in spec.N_grid for rid in range(spec.replicas)]
    results = np.array(run_tasks(_currents_task, tasks, threads)).reshape(len(spec.N_grid), spec.replicas, 2)

    rows = []
    series: Dict[str, List[float]] = {"W": [], "Q": []}
    for a, N in enumerate(spec.N_grid):
        for c, name in enumerate(("W", "Q")):
            err = np.abs(results[a, :, c] - ref[name])
            m, se = _mean_stderr(err)
            series[name].append(m)
            rows.append((N, name, m, se, float(results[a, :, c].mean()), float(ref[name])))

    header = ("N", "observable", "mean_error", "stderr", "mean_microscopic", "pde_value")
    atomic_write_csv(out / "currents_lln.csv", header, rows, _comments(spec))
    files = ["currents_lln.csv"]
    checks = {}
    if len(spec.N_grid) > 1:
        checks = {f"decreasing_in_N[{k}]": _decreasing(v) for k, v in series.items()}
    results = {"pde_W": ref["W"], "pde_Q": ref["Q"], "seeds": {str(k): v for k, v in seeds.items()}}

    if spec.martingale_replicas:
        centering = martingale_centering(spec, threads)
        atomic_write_csv(out / "martingales.csv", MARTINGALE_CSV_HEADER, list(centering.rows()), _comments(spec))
        files.append("martingales.csv")
        for k in MARTINGALE_CHANNELS:
            checks[f"martingale_centered[{k}]"] = centering.centered(k)
        results["martingale_z_max"] = centering.z_max()
    return files, checks, results


# ------------------------
# oracle-check


def _oracle_geometry(spec: ExperimentSpec) -> Geometry:
    return Geometry(
        d=spec.d,
        N=spec.oracle_N,
        transverse_len=spec.oracle_transverse_len if spec.d == 2 else 1,
        boundary_mode=spec.boundary_mode,
        axial_len=spec.oracle_sites,
    )


def _oracle_init(spec: ExperimentSpec, geom: Geometry) -> Configuration:
    digits = spec.oracle_init or "".join("1230"[k % 4] for k in range(geom.n_sites))
    return Configuration.from_array(geom, [int(c) for c in digits])


def _oracle_box(spec: ExperimentSpec) -> int:
    return spec.box_M if spec.box_M is not None else default_box_M(max(1, spec.oracle_N), spec.d)


def _oracle_task(task) -> np.ndarray:
    spec, seed, start, stop = task
    geom = _oracle_geometry(spec)
    params = spec.model_params(spec.oracle_N)
    init = _oracle_init(spec, geom)
    S = 4 ** geom.n_sites
    T = spec.horizon
    if not spec.oracle_coupled:
        counts = np.zeros(S, dtype=np.int64)
        for rid in range(start, stop):
            counts[simulate(init, params, T, seed, replica_id=rid).state_index()] += 1
        return counts
    counts = np.zeros((2, S), dtype=np.int64)
    pair = CoupledConfiguration.diagonal(init, _oracle_box(spec))
    for rid in range(start, stop):
        final = simulate_coupled(pair, params, T, seed, replica_id=rid)
        counts[0, final.left.state_index()] += 1
        counts[1, final.right.state_index()] += 1
    return counts


def _exact_params(params: ModelParams) -> ModelParams:
    b = params.b_hat
    return ModelParams(
        lambda1=Fraction(params.lambda1),
        lambda2=Fraction(params.lambda2),
        r=Fraction(params.r),
        b_hat=BoundaryProfile(tuple(Fraction(x) for x in b.left), tuple(Fraction(x) for x in b.right)),
        scale_N=params.scale_N,
        reaction_on=params.reaction_on,
        exchange_on=params.exchange_on,
        boundary_on=params.boundary_on,
    )


def exhaustive_marginal_check(geom: Geometry, params: ModelParams, box_M: int) -> int:
    """Check marginal fidelity on every pair of configurations; returns the number of pairs."""
    exact = _exact_params(params)
    S = 4 ** geom.n_sites
    configs = [Configuration.from_state_index(geom, i) for i in range(S)]
    for a in configs:
        for b in configs:
            check_marginal_fidelity(CoupledConfiguration(a, b, box_M), exact)
    return S * S


def oracle_cases(spec: ExperimentSpec) -> List[Tuple[str, ExperimentSpec]]:
    """
    (tag, spec) per lattice/rate setting of an oracle-check. Without an
    oracle_grid there is one untagged case; otherwise every axial length
    1..oracle_sites meets every grid setting.
    """
    if not spec.oracle_grid:
        return [("", spec)]
    cases = []
    for k in range(1, spec.oracle_sites + 1):
        for rates in spec.oracle_grid:
            l1, l2, r = parse_rates(rates)
            case = spec.with_overrides(oracle_sites=k, lambda1=l1, lambda2=l2, r=r, oracle_grid=())
            cases.append((f"@{k}:{rates}", case))
    return cases


def _oracle_case(spec: ExperimentSpec, tag: str, seed: int, threads: int):
    geom = _oracle_geometry(spec)
    params = spec.model_params(spec.oracle_N)
    init = _oracle_init(spec, geom)
    T = spec.horizon

    tasks = [(spec, seed, a, b) for a, b in chunk_ranges(spec.replicas)]
    counts = sum(run_tasks(_oracle_task, tasks, threads))

    if spec.oracle_coupled:
        restricted = build_generator(geom, params, box_M=_oracle_box(spec))
        p_left = transient_distribution(restricted, point_mass(restricted, init), T)
        gen = build_generator(geom, params)
        p_right = transient_distribution(gen, point_mass(gen, init), T)
        marginals = [("left", p_left, counts[0] / spec.replicas), ("right", p_right, counts[1] / spec.replicas)]
    else:
        gen = build_generator(geom, params)
        marginals = [("full", transient_distribution(gen, point_mass(gen, init), T), counts / spec.replicas)]

    rows = []
    checks: Dict[str, bool] = {}
    results: Dict[str, Any] = {}
    for name, exact, emp in marginals:
        label = name + tag
        for idx in range(len(exact)):
            if exact[idx] > 0 or emp[idx] > 0:
                digits = "".join(str(int(v)) for v in Configuration.from_state_index(geom, idx).as_array())
                rows.append((label, idx, digits, float(exact[idx]), float(emp[idx])))
        tv = total_variation(exact, emp)
        results[f"tv_{label}"] = tv
        checks[f"tv_within_max[{label}]"] = tv <= spec.max_tv
    if spec.oracle_coupled and geom.n_sites <= 4:
        try:
            results[f"marginal_pairs_checked{tag}"] = exhaustive_marginal_check(geom, params, _oracle_box(spec))
            checks[f"marginal_fidelity{tag}"] = True
        except AssertionFailure as e:
            log.error(kv("marginal_fidelity_failed", case=tag or "-", error=str(e)))
            checks[f"marginal_fidelity{tag}"] = False
    return rows, checks, results


def _run_oracle(spec: ExperimentSpec, out: Path, threads: int):
    rows: List[tuple] = []
    checks: Dict[str, bool] = {}
    results: Dict[str, Any] = {"t": spec.horizon}
    seeds: Dict[str, int] = {}
    for idx, (tag, case) in enumerate(oracle_cases(spec)):
        seed = derive_seed(spec.seed, idx)
        seeds[tag or "-"] = seed
        r, c, res = _oracle_case(case, tag, seed, threads)
        rows.extend(r)
        checks.update(c)
        results.update(res)
    results["seeds"] = seeds

    header = ("marginal", "state_index", "config", "p_exact", "p_empirical")
    atomic_write_csv(out / "oracle_check.csv", header, rows, _comments(spec))
    return ["oracle_check.csv"], checks, results
    return ["oracle_check.csv"], checks, results


# ------------------------
# couple-decay


def decay_layout(spec: ExperimentSpec, N: int) -> Tuple[int, int]:
    """(box_M, transverse_len) for one N."""
    M = spec.box_M if spec.box_M is not None else default_box_M(N, spec.d)
    if spec.d == 1:
        return M, 1
    return M, 2 * M + 1 + 2 * int(math.ceil(spec.pad_factor * N))


def _decay_task(task) -> float:
    spec, N, seed, rid = task
    M, L = decay_layout(spec, N)
    geom = Geometry(d=spec.d, N=N, transverse_len=L, boundary_mode=spec.boundary_mode)
    init = sample_product_measure(make_profile(spec.profile, spec.b_hat), geom, seed, replica_id=rid)
    final = simulate_coupled(CoupledConfiguration.diagonal(init, M), spec.model_params(N), spec.horizon, seed, replica_id=rid)
    return discrepancy_total(final)


def _run_decay(spec: ExperimentSpec, out: Path, threads: int):
    seeds = _seeds(spec)
    tasks = [(spec, N, seeds[N], rid) for N in spec.N_grid for rid in range(spec.replicas)]
    h = np.array(run_tasks(_decay_task, tasks, threads)).reshape(len(spec.N_grid), spec.replicas)
    rows = []
    means = []
    for a, N in enumerate(spec.N_grid):
        m, se = _mean_stderr(h[a])
        means.append(m)
        rows.append((N, decay_layout(spec, N)[0], spec.horizon, m, se))
    write_decay_csv(out / "couple_decay.csv", rows, _comments(spec))
    checks = {"decreasing_in_N": _decreasing(means)} if len(means) > 1 else {}
    return ["couple_decay.csv"], checks, {"seeds": {str(k): v for k, v in seeds.items()}}


# ------------------------
# pde-compare


def _heat_decay_error(spec: ExperimentSpec) -> List[Tuple[float, float]]:
    """|max rho1(t) / max rho1(0) - exp(-(pi/2)^2 t)| for the pure heat mode."""
    params = ModelParams(spec.lambda1, spec.lambda2, spec.r, reaction_on=False)
    zero = BoundaryProfile((0.0, 0.0, 0.0), (0.0, 0.0, 0.0))

    def gamma(u):
        s = np.sin(math.pi * (np.asarray(u)[:, 0] + 1.0) / 2.0)
        return 0.3 * np.stack([s, s, s], axis=1)

    traj = solve_pde(gamma, zero, params, spec.horizon, spec.h, snapshot_times=spec.times)
    peak0 = float(traj.states[0].rho[0].max())
    return [
        (t, abs(float(traj.at(t).rho[0].max()) / peak0 - math.exp(-((math.pi / 2.0) ** 2) * t)))
        for t in spec.times
    ]


def _run_pde_compare(spec: ExperimentSpec, out: Path, threads: int):
    if spec.d != 1 or spec.boundary_mode != "reservoirs":
        raise SpecValidationError("pde-compare needs d=1 in reservoirs mode")
    params = spec.model_params(1)
    rows: List[tuple] = []
    checks: Dict[str, bool] = {}
    results: Dict[str, Any] = {}

    for t, err in _heat_decay_error(spec):
        rows.append(("heat_decay", t, spec.h, "", err))
        checks[f"heat_decay[t={t!r}]"] = err <= spec.compare_tol

    traj = reference_solution(spec)
    sol = duhamel_solve(
        make_profile(spec.profile, spec.b_hat), spec.b_hat, params, spec.horizon,
        M_modes=spec.M_modes, picard=spec.picard, tol=spec.tol, window=spec.window,
    )
    u1 = traj.mesh.u1
    for t in spec.times:
        dist = float(np.max(np.abs(sol.evaluate(t, u1) - traj.at(t).node_values())))
        rows.append(("ftcs_vs_spectral", t, spec.h, "", dist))
        results[f"sup_distance[t={t!r}]"] = dist
    checks["ftcs_vs_spectral"] = results[f"sup_distance[t={spec.horizon!r}]"] <= spec.compare_tol
    results["picard_iterations"] = list(sol.picard_iterations)

    spacings = (2.0 * spec.h, spec.h, spec.h / 2.0)
    monitors = {
        h: [WeakResidualMonitor(parse_triple(name), spec.b_hat, params) for name in spec.test_functions]
        for h in spacings
    }
    for h in spacings:
        reference_solution(spec, monitors=monitors[h], h=h)
    for j, name in enumerate(spec.test_functions):
        series = [monitors[h][j].residual for h in spacings]
        for h, res in zip(spacings, series):
            rows.append(("weak_residual", spec.horizon, h, name, res))
        checks[f"weak_residual_decreasing[G={name}]"] = _decreasing(series)

    header = ("check", "t", "h", "test_function", "value")
    atomic_write_csv(out / "pde_compare.csv", header, rows, _comments(spec))
    return ["pde_compare.csv"], checks, results


# ------------------------

_RUNNERS: Dict[str, Callable[[ExperimentSpec, Path, int], tuple]] = {
    "hydro-converge": _run_hydro,
    "currents-lln": _run_currents,
    "oracle-check": _run_oracle,
    "couple-decay": _run_decay,
    "pde-compare": _run_pde_compare,
}


def experiment_dir(spec: ExperimentSpec, out_dir: str | Path | None = None) -> Path:
    return paths.experiment_path(spec.kind, spec.spec_hash, out_dir or spec.out_dir or None)


def run_experiment(spec: ExperimentSpec, *, out_dir: str | Path | None = None, threads: int = 1) -> ExperimentReport:
    """
    Run one experiment and write its CSV table plus report.json (parameter
    echo, seeds, results, named checks). Returns the report; failed checks
    are recorded, not raised.
    """
    out = experiment_dir(spec, out_dir)
    out.mkdir(parents=True, exist_ok=True)
    log.info(kv("experiment_start", kind=spec.kind, spec_hash=spec.spec_hash[:12], out=str(out)))

    files, checks, results = _RUNNERS[spec.kind](spec, out, threads)
    report = ExperimentReport(
        kind=spec.kind,
        spec_hash=spec.spec_hash,
        out_dir=str(out),
        files=tuple(files) + ("report.json",),
        assertions=checks,
        results=results,
    )
    atomic_write_json(out / "report.json", {**report.to_dict(), "out_dir": None, "spec": spec.to_dict()})
    level = log.info if report.passed else log.warning
    level(kv("experiment_done", kind=spec.kind, passed=report.passed, failed=",".join(report.failed())))
    return report
