"""Declarative experiment sweeps and convergence traces.

A sweep enumerates the Cartesian grid of a config file (scenario x SNR x
secrecy threshold x scheme x CSIT mode, plus seeded trials for random
scenarios), dispatches each cell to the corresponding solver and writes
plot-ready tables.  Outputs per run:

  results.csv   one row per cell/trial plus a mean row per random cell, in a
                fixed column order; deterministic bytes for a fixed config
  timing.csv    wall-clock per row (kept out of results.csv so reruns are
                byte-identical)
  manifest.json config hash, seeds, package/library versions and the modeling
                conventions the numbers depend on

Traces are line-delimited JSON, one record per outer iteration.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from configparser import ConfigParser
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .model import (
    ChannelSet,
    CsitModel,
    SecrecySpec,
    derive_trial_seed,
    random_channels,
    specific_channels,
)
from .sca import InfeasibleThresholds, SolveOptions, SolverFailure, initialize, solve_wsr
from .wmmse import WesrOptions, solve_wesr

__all__ = [
    "ExperimentConfig",
    "ResultRow",
    "RESULT_COLUMNS",
    "load_config",
    "run_sweep",
    "emit_convergence_trace",
]


@dataclass(frozen=True)
class ExperimentConfig:
    """One sweep description (see configs/ for the file format)."""

    name: str = "sweep"
    scenario: str = "specific"          # specific | random
    n_users: int = 2
    n_antennas: int = 2
    gamma: float = 1.0
    thetas: tuple = (2 * math.pi / 9,)
    weights: tuple = (0.5, 0.5)
    schemes: tuple = ("rs", "mulp")
    csit_modes: tuple = ("perfect",)    # perfect | imperfect
    csit_quality: float = 1.0           # gamma_e; "match_gamma" resolves to gamma
    csit_exponent: float = 0.6          # delta
    n_samples: int = 1000               # M
    snr_db: tuple = (20.0,)
    thresholds: tuple = (0.0, 0.25, 0.5, 1.0)
    trials: int = 100
    master_seed: int = 2024
    kappa: float = 0.5
    kappa_values: tuple = (0.1, 0.5, 0.8)
    epsilon: float = 1e-4
    inner_epsilon: float = 1e-5
    max_iterations: int = 200
    max_inner_iterations: int = 50
    solve_tolerance: float = 1e-8
    noise_var: float = 1.0
    out_dir: str = "results"

    def validate(self) -> None:
        if self.scenario not in ("specific", "random"):
            raise ValueError(f"unknown scenario {self.scenario!r}")
        if self.scenario == "specific" and self.n_users != 2:
            raise ValueError("the specific-channel scenario is a 2-user scenario")
        if not self.snr_db or not self.thresholds:
            raise ValueError("SNR and threshold grids must be non-empty")
        if self.trials < 1:
            raise ValueError("trial count must be >= 1")
        if len(self.weights) != self.n_users:
            raise ValueError("weights must have one entry per user")
        for s in self.schemes:
            if s not in ("rs", "mulp"):
                raise ValueError(f"unknown scheme {s!r}")
        for m in self.csit_modes:
            if m not in ("perfect", "imperfect"):
                raise ValueError(f"unknown CSIT mode {m!r}")


RESULT_COLUMNS = [
    "scenario", "csit", "scheme", "snr_db", "threshold", "theta", "gamma",
    "trial", "seed", "wsr",
    "common_rate_per_user", "private_rate_per_user", "secrecy_rate_per_user",
    "common_power_fraction", "private_power_fraction_per_user",
    "iterations", "converged", "feasible",
]


@dataclass
class ResultRow:
    scenario: str
    csit: str
    scheme: str
    snr_db: float
    threshold: float
    theta: float
    gamma: float
    trial: str
    seed: str
    wsr: float
    common_rate_per_user: tuple
    private_rate_per_user: tuple
    secrecy_rate_per_user: tuple
    common_power_fraction: float
    private_power_fraction_per_user: tuple
    iterations: int
    converged: bool
    feasible: bool
    wall_time_ms: float = 0.0
    error: str = ""

    def check(self) -> None:
        total = self.common_power_fraction + sum(self.private_power_fraction_per_user)
        if total > 1.0 + 1e-6:
            raise AssertionError(f"power fractions sum to {total} > 1")
        if self.feasible and not self.error:
            if any(s < self.threshold - 1e-3 for s in self.secrecy_rate_per_user):
                raise AssertionError("feasible row violates its secrecy threshold")


def _fmt(value) -> str:
    if isinstance(value, float):
        return format(value, ".12g")
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, tuple):
        return ";".join(format(v, ".12g") for v in value)
    return str(value)


def _parse_angle(token: str) -> float:
    """Angles like '2pi/9', 'pi/4', '0.5'."""
    token = token.strip().replace("*", "")
    if "pi" in token:
        head, _, tail = token.partition("pi")
        value = float(head) if head not in ("", "+", "-") else float(head + "1")
        value *= math.pi
        if tail.startswith("/"):
            value /= float(tail[1:])
        return value
    return float(token)


def _parse_list(text: str, conv=float) -> tuple:
    return tuple(conv(tok.strip()) for tok in text.split(",") if tok.strip())


def load_config(path) -> ExperimentConfig:
    """Read the sectioned key-value config format."""
    parser = ConfigParser()
    read = parser.read(path)
    if not read:
        raise FileNotFoundError(path)
    sc = parser["scenario"] if parser.has_section("scenario") else {}
    alg = parser["algorithm"] if parser.has_section("algorithm") else {}
    sw = parser["sweep"] if parser.has_section("sweep") else {}
    out = parser["output"] if parser.has_section("output") else {}

    def get(section, key, default, conv=str):
        if key in section:
            return conv(section[key])
        return default

    defaults = ExperimentConfig()
    gamma = get(sc, "gamma", defaults.gamma, float)
    quality_raw = get(alg, "csit_quality", None)
    if quality_raw in (None, "match_gamma"):
        quality = gamma if quality_raw == "match_gamma" else defaults.csit_quality
    else:
        quality = float(quality_raw)
    config = ExperimentConfig(
        name=get(out, "prefix", Path(path).stem),
        scenario=get(sc, "kind", defaults.scenario),
        n_users=get(sc, "users", defaults.n_users, int),
        n_antennas=get(sc, "antennas", defaults.n_antennas, int),
        gamma=gamma,
        thetas=get(sc, "theta", defaults.thetas,
                   lambda s: tuple(_parse_angle(t) for t in s.split(","))),
        weights=get(sc, "weights", defaults.weights, _parse_list),
        schemes=get(alg, "schemes", defaults.schemes,
                    lambda s: _parse_list(s, str.lower)),
        csit_modes=get(alg, "csit", defaults.csit_modes,
                       lambda s: _parse_list(s, str.lower)),
        csit_quality=quality,
        csit_exponent=get(alg, "csit_exponent", defaults.csit_exponent, float),
        n_samples=get(alg, "samples", defaults.n_samples, int),
        snr_db=get(sw, "snr_db", defaults.snr_db, _parse_list),
        thresholds=get(sw, "secrecy_thresholds", defaults.thresholds, _parse_list),
        trials=get(sw, "trials", defaults.trials, int),
        master_seed=get(sw, "master_seed", defaults.master_seed, int),
        kappa=get(alg, "kappa", defaults.kappa, float),
        kappa_values=get(alg, "kappa_values", defaults.kappa_values, _parse_list),
        epsilon=get(alg, "epsilon", defaults.epsilon, float),
        inner_epsilon=get(alg, "inner_epsilon", defaults.inner_epsilon, float),
        max_iterations=get(alg, "max_iterations", defaults.max_iterations, int),
        max_inner_iterations=get(alg, "max_inner_iterations",
                                 defaults.max_inner_iterations, int),
        solve_tolerance=get(alg, "solve_tolerance", defaults.solve_tolerance, float),
        noise_var=get(alg, "noise_var", defaults.noise_var, float),
        out_dir=get(out, "directory", defaults.out_dir),
    )
    config.validate()
    return config


@dataclass(frozen=True)
class _Cell:
    """One solver invocation: a grid point plus (for random scenarios) a trial."""

    config: ExperimentConfig
    csit: str
    scheme: str
    snr_db: float
    threshold: float
    theta: float
    trial: int


def _trial_channels(config: ExperimentConfig, cell: _Cell) -> tuple[ChannelSet, str]:
    if config.scenario == "specific":
        return specific_channels(config.gamma, cell.theta, config.n_antennas), ""
    seed = derive_trial_seed(config.master_seed, cell.trial)
    return random_channels(config.n_users, config.n_antennas, seed), str(cell.trial)


def run_cell(cell: _Cell) -> ResultRow:
    """Solve one grid cell; failures are recorded in the row, never raised."""
    config = cell.config
    power = 10.0 ** (cell.snr_db / 10.0) * config.noise_var
    channels, seed_label = _trial_channels(config, cell)
    spec = SecrecySpec.uniform(cell.threshold, config.weights)
    started = time.perf_counter()
    try:
        if cell.csit == "perfect":
            options = SolveOptions(
                epsilon=config.epsilon, max_iterations=config.max_iterations,
                kappa=config.kappa, noise_var=config.noise_var,
                solve_tolerance=config.solve_tolerance)
            sol = solve_wsr(channels, spec, power, options, scheme=cell.scheme)
        else:
            quality = config.csit_quality
            csit = CsitModel.from_quality(channels, quality, config.csit_exponent, power)
            sample_seed = int(derive_trial_seed(config.master_seed,
                                                1_000_000 + cell.trial).generate_state(1)[0])
            options = WesrOptions(
                epsilon_outer=config.epsilon, epsilon_inner=config.inner_epsilon,
                max_outer=config.max_iterations, max_inner=config.max_inner_iterations,
                kappa=config.kappa, noise_var=config.noise_var,
                solve_tolerance=config.solve_tolerance,
                sample_seed=sample_seed)
            sol = solve_wesr(csit, spec, power, config.n_samples, options,
                             scheme=cell.scheme)
        elapsed = (time.perf_counter() - started) * 1e3
        return ResultRow(
            scenario=config.scenario, csit=cell.csit, scheme=cell.scheme,
            snr_db=cell.snr_db, threshold=cell.threshold, theta=cell.theta,
            gamma=config.gamma, trial=seed_label or "0", seed=seed_label,
            wsr=sol.wsr,
            common_rate_per_user=tuple(sol.common_rate),
            private_rate_per_user=tuple(sol.breakdown.rate_private),
            secrecy_rate_per_user=tuple(sol.breakdown.secrecy),
            common_power_fraction=float(np.sum(np.abs(sol.common) ** 2) / power),
            private_power_fraction_per_user=tuple(
                np.sum(np.abs(sol.private) ** 2, axis=0) / power),
            iterations=sol.iterations, converged=sol.converged, feasible=sol.feasible,
            wall_time_ms=elapsed)
    except (InfeasibleThresholds, SolverFailure) as exc:
        elapsed = (time.perf_counter() - started) * 1e3
        k = config.n_users
        return ResultRow(
            scenario=config.scenario, csit=cell.csit, scheme=cell.scheme,
            snr_db=cell.snr_db, threshold=cell.threshold, theta=cell.theta,
            gamma=config.gamma, trial=seed_label or "0", seed=seed_label,
            wsr=float("nan"), common_rate_per_user=(float("nan"),) * k,
            private_rate_per_user=(float("nan"),) * k,
            secrecy_rate_per_user=(float("nan"),) * k,
            common_power_fraction=0.0,
            private_power_fraction_per_user=(0.0,) * k,
            iterations=0, converged=False, feasible=False,
            wall_time_ms=elapsed, error=type(exc).__name__)


def _enumerate_cells(config: ExperimentConfig) -> list[_Cell]:
    thetas = config.thetas if config.scenario == "specific" else (0.0,)
    trials = range(config.trials) if config.scenario == "random" else (0,)
    cells = []
    for csit in config.csit_modes:
        for scheme in config.schemes:
            for snr in config.snr_db:
                for th in config.thresholds:
                    for theta in thetas:
                        for trial in trials:
                            cells.append(_Cell(config, csit, scheme, snr, th,
                                               theta, trial))
    cells.sort(key=lambda c: (c.csit, c.scheme, c.snr_db, c.threshold, c.theta,
                              c.trial))
    return cells


def _mean_row(rows: list[ResultRow]) -> ResultRow:
    ok = [r for r in rows if not r.error]
    base = rows[0]
    k = len(base.private_rate_per_user)

    def mean_tuple(getter):
        if not ok:
            return (float("nan"),) * k
        return tuple(float(np.mean([getter(r)[i] for r in ok])) for i in range(k))

    return ResultRow(
        scenario=base.scenario, csit=base.csit, scheme=base.scheme,
        snr_db=base.snr_db, threshold=base.threshold, theta=base.theta,
        gamma=base.gamma, trial="mean", seed="",
        wsr=float(np.mean([r.wsr for r in ok])) if ok else float("nan"),
        common_rate_per_user=mean_tuple(lambda r: r.common_rate_per_user),
        private_rate_per_user=mean_tuple(lambda r: r.private_rate_per_user),
        secrecy_rate_per_user=mean_tuple(lambda r: r.secrecy_rate_per_user),
        common_power_fraction=(float(np.mean([r.common_power_fraction for r in ok]))
                               if ok else 0.0),
        private_power_fraction_per_user=mean_tuple(
            lambda r: r.private_power_fraction_per_user),
        iterations=int(np.mean([r.iterations for r in ok])) if ok else 0,
        converged=all(r.converged for r in ok) if ok else False,
        feasible=all(r.feasible for r in ok) if ok else False,
        wall_time_ms=float(np.sum([r.wall_time_ms for r in rows])))


def _write_tables(rows: list[ResultRow], out_dir: Path, name: str) -> dict:
    results_path = out_dir / f"{name}_results.csv"
    timing_path = out_dir / f"{name}_timing.csv"
    with open(results_path, "w") as fh:
        fh.write(",".join(RESULT_COLUMNS) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(getattr(row, col)) for col in RESULT_COLUMNS) + "\n")
    with open(timing_path, "w") as fh:
        fh.write("csit,scheme,snr_db,threshold,theta,trial,wall_time_ms,error\n")
        for row in rows:
            fh.write(",".join([row.csit, row.scheme, _fmt(row.snr_db),
                               _fmt(row.threshold), _fmt(row.theta), row.trial,
                               format(row.wall_time_ms, ".3f"), row.error]) + "\n")
    return {"results": str(results_path), "timing": str(timing_path)}


def _manifest(config: ExperimentConfig, config_path, extra: dict) -> dict:
    digest = ""
    if config_path is not None:
        digest = hashlib.sha256(Path(config_path).read_bytes()).hexdigest()
    manifest = {
        "package": "rsbeam",
        "version": __version__,
        "numpy": np.__version__,
        "config_sha256": digest,
        "master_seed": config.master_seed,
        "config": dataclasses.asdict(config),
        "conventions": {
            "noise_var": config.noise_var,
            "rates": "bits per channel use (log2)",
            "specific_channel_extension":
                "h1 = ones(N_t); h2 = gamma * exp(1j*theta*arange(N_t)) "
                "(uniform phase ramp beyond 2 antennas)",
            "imperfect_csit_estimate":
                "estimate drawn CN(0,1) per entry; conditional samples "
                "sqrt(1-err)*estimate + sqrt(err)*CN(0,1), so the effective "
                "estimate marginal is CN(0, 1-err) and realizations keep unit "
                "entry variance",
            "trial_seed": "numpy SeedSequence(entropy=(master_seed, trial_index))",
        },
    }
    manifest.update(extra)
    return manifest


def run_sweep(config: ExperimentConfig, out_dir=None, jobs: int = 1,
              config_path=None) -> list[ResultRow]:
    """Run the full grid and write results/timing

    tables plus a manifest; returns the rows in their deterministic order."""
    config.validate()
    out = Path(out_dir if out_dir is not None else config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cells = _enumerate_cells(config)
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(run_cell, cells, chunksize=1))
    else:
        rows = [run_cell(cell) for cell in cells]

    # append a mean row per random-scenario cell group, preserving order
    final_rows: list[ResultRow] = []
    if config.scenario == "random":
        group: list[ResultRow] = []
        for row, cell in zip(rows, cells):
            group.append(row)
            if int(cell.trial) == config.trials - 1:
                final_rows.extend(group)
                final_rows.append(_mean_row(group))
                group = []
        final_rows.extend(group)
    else:
        final_rows = rows

    for row in final_rows:
        row.check()
    paths = _write_tables(final_rows, out, config.name)
    manifest = _manifest(config, config_path, {"outputs": paths, "jobs": jobs,
                                               "rows": len(final_rows)})
    with open(out / f"{config.name}_manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
    return final_rows


def emit_convergence_trace(config: ExperimentConfig, out_dir=None,
                           config_path=None) -> Path:
    """Objective traces per (scheme, CSIT mode, SNR, kappa) as JSON lines.

    Each record carries the iteration index, the algorithm's own objective
    (ascending surrogate WSR for the perfect-CSIT solver, descending weighted
    MSE for the imperfect one), the achieved weighted rate and per-user rates.
    """
    config.validate()
    out = Path(out_dir if out_dir is not None else config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"{config.name}_trace.jsonl"
    theta = config.thetas[0]
    threshold = config.thresholds[0]
    with open(path, "w") as fh:
        for csit in config.csit_modes:
            for scheme in config.schemes:
                for snr in config.snr_db:
                    for kappa in config.kappa_values:
                        cell = _Cell(config, csit, scheme, snr, threshold, theta, 0)
                        power = 10.0 ** (snr / 10.0) * config.noise_var
                        channels, _ = _trial_channels(config, cell)
                        spec = SecrecySpec.uniform(threshold, config.weights)
                        if csit == "perfect":
                            options = SolveOptions(
                                epsilon=config.epsilon,
                                max_iterations=config.max_iterations, kappa=kappa,
                                noise_var=config.noise_var,
                                solve_tolerance=config.solve_tolerance)
                            sol = solve_wsr(channels, spec, power, options,
                                            scheme=scheme)
                            objective = list(sol.objective_trace)
                            rate_trace = objective
                        else:
                            csit_model = CsitModel.from_quality(
                                channels, config.csit_quality, config.csit_exponent,
                                power)
                            options = WesrOptions(
                                epsilon_outer=config.epsilon,
                                epsilon_inner=config.inner_epsilon,
                                max_outer=config.max_iterations,
                                max_inner=config.max_inner_iterations, kappa=kappa,
                                noise_var=config.noise_var,
                                solve_tolerance=config.solve_tolerance,
                                sample_seed=config.master_seed)
                            sol = solve_wesr(csit_model, spec, power,
                                             config.n_samples, options, scheme=scheme)
                            objective = list(sol.extras["outer_objective_trace"])
                            rate_trace = list(sol.objective_trace)[1:]
                        for i, obj in enumerate(objective):
                            record = {
                                "csit": csit, "scheme": scheme, "snr_db": snr,
                                "kappa": kappa, "iteration": i,
                                "objective": obj,
                                "weighted_rate": rate_trace[i] if i < len(rate_trace) else None,
                            }
                            if i == len(objective) - 1:
                                record["final_private_rates"] = list(
                                    sol.breakdown.rate_private)
                                record["final_wsr"] = sol.wsr
                            fh.write(json.dumps(record) + "\n")
    return path
