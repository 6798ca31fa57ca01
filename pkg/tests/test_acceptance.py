"""Acceptance gate: one test per criterion, each printing a pass/fail line.

Run with `pytest tests/test_acceptance.py -v -s`.  The random-channel
instances are shared across criteria through module-scoped fixtures so the
whole gate stays at desk scale.
"""

import math
import time

import numpy as np
import pytest

from rsbeam import mulp, oracle, sca, wmmse
from rsbeam.experiments import load_config, run_sweep
from rsbeam.model import (
    ChannelSet,
    CsitModel,
    SecrecySpec,
    compute_sinrs,
    derive_trial_seed,
    random_channels,
    specific_channels,
)

ACCEPT_SEED = 20240
POWER = 100.0  # 20 dB over unit noise
THRESHOLD = 0.1
WEIGHTS = (0.5, 0.5)
N_INSTANCES = 20


def _report(criterion: int, passed: bool, detail: str) -> None:
    print(f"\nACCEPTANCE {criterion}: {'PASS' if passed else 'FAIL'} - {detail}")


@pytest.fixture(scope="module")
def channels20():
    return [random_channels(2, 4, derive_trial_seed(ACCEPT_SEED, i))
            for i in range(N_INSTANCES)]


@pytest.fixture(scope="module")
def perfect_solutions(channels20):
    """RS and MULP perfect-CSIT solves at the shared threshold (tight stop)."""
    spec = SecrecySpec.uniform(THRESHOLD, WEIGHTS)
    options = sca.SolveOptions(epsilon=1e-7)
    out = {"rs": [], "mulp": []}
    for ch in channels20:
        out["rs"].append(sca.solve_wsr(ch, spec, POWER, options))
        out["mulp"].append(mulp.solve_mulp_wsr(ch, spec, POWER, options))
    return out


@pytest.fixture(scope="module")
def imperfect_solutions(channels20):
    """RS and MULP average-rate solves, 100 shared samples per instance."""
    spec = SecrecySpec.uniform(THRESHOLD, WEIGHTS)
    out = {"rs": [], "mulp": []}
    for i, ch in enumerate(channels20):
        model = CsitModel.from_quality(ch, 1.0, 0.6, POWER)
        options = wmmse.WesrOptions(epsilon_outer=1e-5, max_outer=300,
                                    sample_seed=1000 + i)
        out["rs"].append(wmmse.solve_wesr(model, spec, POWER, 100, options))
        out["mulp"].append(mulp.solve_mulp_wesr(model, spec, POWER, 100, options))
    return out


class TestCriterion1:
    def test_rate_wmmse_identity(self):
        started = time.perf_counter()
        rng = np.random.default_rng(ACCEPT_SEED)
        worst = 0.0
        for _ in range(200):
            k = int(rng.integers(1, 4))
            n_t = int(rng.integers(1, 5))
            channels = ChannelSet(rng.standard_normal((k, n_t))
                                  + 1j * rng.standard_normal((k, n_t)))
            common = rng.standard_normal(n_t) + 1j * rng.standard_normal(n_t)
            private = rng.standard_normal((n_t, k)) + 1j * rng.standard_normal((n_t, k))
            gaps = wmmse.rate_wmmse_gap(common, private, channels)
            for arr in gaps.values():
                worst = max(worst, float(np.max(arr, initial=0.0)))
        elapsed = time.perf_counter() - started
        passed = worst <= 1e-9 and elapsed < 5.0
        _report(1, passed, f"max |xi_mmse - (1 - R)| = {worst:.3e} over 200 instances "
                           f"(common/private/wiretap), {elapsed:.2f}s")
        assert worst <= 1e-9
        assert elapsed < 5.0


class TestCriterion2:
    def test_taylor_surrogate_validity(self):
        started = time.perf_counter()
        rep = oracle.check_taylor_bounds(10_000, seed=ACCEPT_SEED)
        elapsed = time.perf_counter() - started
        passed = (rep.exp_tangent_max_violation <= 1e-12
                  and rep.ratio_tangent_max_violation <= 1e-12
                  and rep.wmse_tangent_max_violation <= 1e-9
                  and rep.exp_tangency_residual <= 1e-10
                  and rep.ratio_tangency_residual <= 1e-10
                  and rep.wmse_tangency_residual <= 1e-10
                  and elapsed < 5.0)
        _report(2, passed,
                f"violations: rate tangent {rep.exp_tangent_max_violation:.2e}, "
                f"ratio tangent {rep.ratio_tangent_max_violation:.2e}, "
                f"wmse tangent {rep.wmse_tangent_max_violation:.2e}; "
                f"tangency residuals <= {max(rep.exp_tangency_residual, rep.ratio_tangency_residual, rep.wmse_tangency_residual):.2e}; "
                f"{elapsed:.2f}s")
        assert rep.exp_tangent_max_violation <= 1e-12
        assert rep.ratio_tangent_max_violation <= 1e-12
        assert rep.wmse_tangent_max_violation <= 1e-9
        assert rep.exp_tangency_residual <= 1e-10
        assert rep.ratio_tangency_residual <= 1e-10
        assert rep.wmse_tangency_residual <= 1e-10
        assert elapsed < 5.0


class TestCriterion3:
    def test_algorithm1_monotone_convergence(self):
        started = time.perf_counter()
        channels = specific_channels(1.0, 2 * math.pi / 9)
        spec = SecrecySpec.uniform(0.1, WEIGHTS)
        sol = sca.solve_wsr(channels, spec, POWER,
                            sca.SolveOptions(epsilon=1e-4, kappa=0.5))
        elapsed = time.perf_counter() - started
        trace = np.array(sol.objective_trace)
        worst_drop = float(np.min(np.diff(trace))) if len(trace) > 1 else 0.0
        passed = (worst_drop >= -1e-7 and sol.converged and sol.iterations <= 100
                  and elapsed < 60.0)
        _report(3, passed,
                f"converged in {sol.iterations} iterations, worst trace step "
                f"{worst_drop:.2e}, WSR {sol.wsr:.4f}, {elapsed:.2f}s")
        assert worst_drop >= -1e-7
        assert sol.converged and sol.iterations <= 100
        assert elapsed < 60.0


class TestCriterion4:
    def test_posthoc_secrecy_feasibility(self, perfect_solutions):
        worst = math.inf
        for scheme in ("rs", "mulp"):
            for sol in perfect_solutions[scheme]:
                worst = min(worst, float(np.min(sol.breakdown.secrecy - THRESHOLD)))
        passed = worst >= -1e-3
        _report(4, passed,
                f"worst secrecy margin over {2 * N_INSTANCES} solutions: {worst:.4e} "
                f"(threshold {THRESHOLD})")
        assert worst >= -1e-3


class TestCriterion5:
    def test_rs_at_least_mulp_perfect(self, perfect_solutions):
        gaps = [rs.wsr - mu.wsr for rs, mu in zip(perfect_solutions["rs"],
                                                  perfect_solutions["mulp"])]
        worst = min(gaps)
        passed = worst >= -1e-6
        _report(5, passed,
                f"perfect CSIT: min WSR(RS) - WSR(MULP) = {worst:.4e} over "
                f"{N_INSTANCES} instances")
        assert worst >= -1e-6

    def test_rs_at_least_mulp_imperfect(self, imperfect_solutions):
        gaps = [rs.wsr - mu.wsr for rs, mu in zip(imperfect_solutions["rs"],
                                                  imperfect_solutions["mulp"])]
        worst = min(gaps)
        passed = worst >= -1e-6
        _report(5, passed,
                f"imperfect CSIT (M=100): min WASR(RS) - WASR(MULP) = {worst:.4e} "
                f"over {N_INSTANCES} instances")
        assert worst >= -1e-6


class TestCriterion6:
    @pytest.fixture(scope="class")
    def threshold_grid(self, channels20):
        grid = (0.0, 0.25, 0.5, 1.0)
        options = sca.SolveOptions(epsilon=1e-6)
        table = []
        for ch in channels20:
            row = []
            for th in grid:
                spec = SecrecySpec.uniform(th, WEIGHTS)
                row.append(sca.solve_wsr(ch, spec, POWER, options).wsr)
            table.append(row)
        return grid, np.array(table)

    def test_threshold_monotonicity(self, threshold_grid):
        _, table = threshold_grid
        worst = float(np.min(table[:, :-1] - table[:, 1:]))
        passed = worst >= -1e-4
        _report(6, passed,
                f"worst WSR increase along the threshold grid: {-worst:.4e} "
                f"(nonincreasing within 1e-4)")
        assert worst >= -1e-4

    def test_flat_region(self, threshold_grid):
        _, table = threshold_grid
        holds = table[:, 1] >= table[:, 0] - 1e-2  # WSR(0.25) vs WSR(0)
        share = float(np.mean(holds))
        passed = share >= 0.8
        _report(6, passed,
                f"flat region WSR(0.25) >= WSR(0) - 1e-2 on {share:.0%} of instances")
        assert share >= 0.8


class TestCriterion7:
    def test_oracle_lower_bound(self):
        spec = SecrecySpec.uniform(0.2, WEIGHTS)
        worst = math.inf
        slowest = 0.0
        for i in range(5):
            rng = np.random.default_rng(derive_trial_seed(ACCEPT_SEED, 500 + i))
            channels = ChannelSet(rng.standard_normal((2, 2)).astype(complex))
            started = time.perf_counter()
            res = oracle.grid_oracle_wsr(channels, spec, POWER)
            oracle_time = time.perf_counter() - started
            slowest = max(slowest, oracle_time)
            sol = sca.solve_wsr(channels, spec, POWER, sca.SolveOptions(epsilon=1e-6))
            worst = min(worst, sol.wsr - res.wsr)
            assert oracle_time < 120.0
        passed = worst >= -1e-3
        _report(7, passed,
                f"min SCA - oracle gap over 5 real instances: {worst:.4e}; "
                f"slowest oracle {slowest:.1f}s")
        assert worst >= -1e-3


class TestCriterion8:
    def test_outer_objective_monotone(self, imperfect_solutions):
        worst = 0.0
        for scheme in ("rs", "mulp"):
            for sol in imperfect_solutions[scheme]:
                trace = np.array(sol.extras["outer_objective_trace"])
                if len(trace) > 1:
                    worst = max(worst, float(np.max(np.diff(trace))))
        passed = worst <= 1e-7
        _report(8, passed,
                f"max outer-objective increase over {2 * N_INSTANCES} runs: {worst:.2e}")
        assert worst <= 1e-7

    def test_degenerate_consistency(self):
        spec = SecrecySpec.uniform(THRESHOLD, WEIGHTS)
        mismatches = []
        worst_saf = 0.0
        for i in range(5):
            channels = random_channels(2, 4, derive_trial_seed(ACCEPT_SEED, 700 + i))
            model = CsitModel(estimate=channels, error_var=np.zeros(2))
            sol2 = wmmse.solve_wesr(model, spec, POWER, n_samples=1,
                                    options=wmmse.WesrOptions(epsilon_outer=1e-5,
                                                              max_outer=300))
            inst = compute_sinrs(channels, sol2.common, sol2.private)
            worst_saf = max(worst_saf, float(np.max(np.abs(
                sol2.breakdown.rate_private - inst.rate_private))))
            worst_saf = max(worst_saf, float(np.max(np.abs(
                sol2.breakdown.rate_common - inst.rate_common))))
            sol1 = sca.solve_wsr(channels, spec, POWER, sca.SolveOptions(epsilon=1e-6))
            wsr2 = float(spec.weights @ (sol2.common_rate + inst.rate_private))
            rel = abs(wsr2 - sol1.wsr) / sol1.wsr
            mismatches.append(rel)
            if rel > 0.03:
                print(f"\n  note: instance {i} KKT-point gap {rel:.2%} "
                      f"(alg2 {wsr2:.4f} vs alg1 {sol1.wsr:.4f}) - logged for review")
        passed_saf = worst_saf <= 1e-12
        _report(8, passed_saf,
                f"degenerate SAF vs instantaneous max gap {worst_saf:.2e}; "
                f"alg2-vs-alg1 relative gaps "
                f"{', '.join(f'{m:.2%}' for m in mismatches)} (soft check at 3%)")
        assert worst_saf <= 1e-12


class TestCriterion9:
    def test_mmse_closed_form_optimality(self):
        rep = oracle.check_rate_wmmse(n_samples=100, seed=ACCEPT_SEED, n_probes=100)
        passed = (rep.equalizer_probe_violations == 0
                  and rep.weight_probe_violations == 0)
        _report(9, passed,
                f"equalizer probe violations {rep.equalizer_probe_violations}, "
                f"weight grid violations {rep.weight_probe_violations} over "
                f"{rep.instances} instances")
        assert rep.equalizer_probe_violations == 0
        assert rep.weight_probe_violations == 0


class TestCriterion10:
    def test_reproducible_sweep(self, tmp_path):
        config = load_config("configs/specific_2x2_ci.ini")
        run_sweep(config, out_dir=tmp_path / "a", config_path="configs/specific_2x2_ci.ini")
        run_sweep(config, out_dir=tmp_path / "b", config_path="configs/specific_2x2_ci.ini")
        a = (tmp_path / "a" / "specific_2x2_ci_results.csv").read_bytes()
        b = (tmp_path / "b" / "specific_2x2_ci_results.csv").read_bytes()
        passed = a == b
        _report(10, passed,
                f"two runs of the specific_2x2_threshold_sweep desk-scale sweep: results tables "
                f"{'byte-identical' if passed else 'DIFFER'} ({len(a)} bytes)")
        assert a == b
