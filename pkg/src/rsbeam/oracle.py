"""Independent brute-force and identity oracles.

These ground the acceptance tests without touching the optimizer code paths:
a grid search over real-valued two-user precoders (a restriction of the full
complex search space, so its best feasible value lower-bounds the SCA
optimum), sampled validity checks of the first-order surrogates, and the
rate-WMMSE identity with perturbation probes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .model import ChannelSet, SecrecySpec, compute_sinrs
from .wmmse import update_equalizers_and_weights

__all__ = [
    "GridSpec",
    "OracleResult",
    "grid_oracle_wsr",
    "TaylorReport",
    "check_taylor_bounds",
    "RateWmmseReport",
    "check_rate_wmmse",
]


@dataclass(frozen=True)
class GridSpec:
    """Resolution of the brute-force search: power step as a fraction of the
    budget, angle step over [0, pi)."""

    power_step: float = 0.05
    angle_step: float = math.pi / 32


@dataclass
class OracleResult:
    wsr: float
    common: np.ndarray
    private: np.ndarray
    common_rate: np.ndarray
    candidates: int
    feasible: int

    def summary(self) -> str:
        return (f"grid oracle: best feasible WSR {self.wsr:.6f} "
                f"({self.feasible}/{self.candidates} candidates feasible)")


def _power_levels(power: float, step: float):
    n = int(round(1.0 / step))
    levels = np.linspace(0.0, power, n + 1)
    out = []
    for qc in levels:
        for q1 in levels:
            for q2 in levels:
                if qc + q1 + q2 <= power + 1e-9:
                    out.append((qc, q1, q2))
    return out


def grid_oracle_wsr(channels: ChannelSet, spec: SecrecySpec, power: float,
                    grid: GridSpec = GridSpec(), noise_var: float = 1.0) -> OracleResult:
    """Exhaustive search over real rank-one precoders for two users, two antennas.

    Candidates are p_i = sqrt(q_i) [cos phi_i, sin phi_i] over a simplex grid
    of power splits (q_c, q_1, q_2) and an angle grid on [0, pi); sign flips
    are redundant because every rate depends on |h^T p| only.  For each
    candidate the true rates decide secrecy feasibility and the common rate
    goes entirely to the heaviest-weight user.
    """
    if channels.n_users != 2 or channels.n_antennas != 2:
        raise ValueError("grid oracle covers the 2-user, 2-antenna case only")
    if not channels.is_real(tol=0.0):
        raise ValueError("grid oracle requires real-valued channels")
    h = channels.gains.real
    u = spec.weights
    th = spec.thresholds

    angles = np.arange(0.0, math.pi, grid.angle_step)
    # a[k, i] = h_k . [cos angle_i, sin angle_i]
    a = h @ np.vstack([np.cos(angles), np.sin(angles)])
    a2 = a ** 2
    heavy = int(np.argmax(u))

    best = -np.inf
    best_pick = None
    n_angles = len(angles)
    candidates = 0
    feasible_count = 0

    for qc, q1, q2 in _power_levels(power, grid.power_step):
        # axes: (phi_c, phi_1, phi_2)
        sc1 = qc * a2[0][:, None, None]
        sc2 = qc * a2[1][:, None, None]
        s11 = q1 * a2[0][None, :, None]
        s12 = q1 * a2[1][None, :, None]
        s21 = q2 * a2[0][None, None, :]
        s22 = q2 * a2[1][None, None, :]

        rate_c1 = np.log2(1 + sc1 / (s11 + s21 + noise_var))
        rate_c2 = np.log2(1 + sc2 / (s12 + s22 + noise_var))
        rate_c = np.minimum(rate_c1, rate_c2)
        rate_p1 = np.log2(1 + s11 / (s21 + noise_var))
        rate_p2 = np.log2(1 + s22 / (s12 + noise_var))
        # eavesdropper has removed the common stream and its own private one
        wiretap_1 = np.log2(1 + s12 / noise_var)  # stream 1 at user 2
        wiretap_2 = np.log2(1 + s21 / noise_var)  # stream 2 at user 1

        ok = ((np.maximum(rate_p1 - wiretap_1, 0.0) >= th[0])
              & (np.maximum(rate_p2 - wiretap_2, 0.0) >= th[1]))
        candidates += ok.size
        n_ok = int(ok.sum())
        feasible_count += n_ok
        if n_ok == 0:
            continue
        wsr_grid = u[0] * rate_p1 + u[1] * rate_p2 + u[heavy] * rate_c
        wsr_grid = np.broadcast_to(wsr_grid, (n_angles,) * 3)
        masked = np.where(ok, wsr_grid, -np.inf)
        idx = np.unravel_index(np.argmax(masked), masked.shape)
        if masked[idx] > best:
            best = float(masked[idx])
            best_pick = (qc, q1, q2, idx)

    if best_pick is None:
        return OracleResult(-np.inf, np.zeros(2), np.zeros((2, 2)), np.zeros(2),
                            candidates, 0)
    qc, q1, q2, (ic, i1, i2) = best_pick
    direction = lambda i: np.array([math.cos(angles[i]), math.sin(angles[i])])
    common = math.sqrt(qc) * direction(ic)
    private = np.column_stack([math.sqrt(q1) * direction(i1),
                               math.sqrt(q2) * direction(i2)])
    bd = compute_sinrs(channels, common.astype(complex), private.astype(complex),
                       noise_var)
    c = np.zeros(2)
    c[heavy] = bd.rate_common.min()
    return OracleResult(best, common, private, c, candidates, feasible_count)


@dataclass
class TaylorReport:
    """Sampled validity of the three first-order surrogates.

    Violation = surrogate minus the side it must stay on; nonpositive (up to
    float noise) means the bound holds.  The bilinear wiretap surrogate is
    probed as printed and reported only (not asserted): its left side need
    not stay below the true bilinear product away from two users.
    """

    exp_tangent_max_violation: float
    exp_tangency_residual: float
    ratio_tangent_max_violation: float
    ratio_tangency_residual: float
    wmse_tangent_max_violation: float
    wmse_tangency_residual: float
    bilinear_violations: int
    bilinear_max_excess: float
    samples: int

    def summary(self) -> str:
        return (
            "surrogate validity over "
            f"{self.samples} samples:\n"
            f"  rate tangent  : max violation {self.exp_tangent_max_violation:.3e}, "
            f"tangency {self.exp_tangency_residual:.3e}\n"
            f"  ratio tangent : max violation {self.ratio_tangent_max_violation:.3e}, "
            f"tangency {self.ratio_tangency_residual:.3e}\n"
            f"  wmse tangent  : max violation {self.wmse_tangent_max_violation:.3e}, "
            f"tangency {self.wmse_tangency_residual:.3e}\n"
            f"  bilinear probe: {self.bilinear_violations} over-estimates, "
            f"max excess {self.bilinear_max_excess:.3e} (diagnostic only)")


def check_taylor_bounds(n_samples: int = 10_000, seed: int = 0) -> TaylorReport:
    """Sample the surrogate inequalities used by both algorithms."""
    rng = np.random.default_rng(seed)

    # exponential tangent: 2^{a0} (1 + ln2 (a - a0)) <= 2^a on [-10, 10]
    a0 = rng.uniform(-10, 10, n_samples)
    a = rng.uniform(-10, 10, n_samples)
    exp_viol = float(np.max(2.0 ** a0 * (1 + np.log(2) * (a - a0)) - 2.0 ** a))
    exp_tan = float(np.max(np.abs(2.0 ** a0 * (1 + np.log(2) * 0.0) - 2.0 ** a0)))

    # quadratic-over-linear tangent: 2Re{w0^* w}/b0 - |w0|^2 b / b0^2 <= |w|^2 / b
    n = n_samples
    w = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    w0 = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    b = rng.uniform(0.05, 10.0, n)
    b0 = rng.uniform(0.05, 10.0, n)
    tangent = 2 * np.real(np.conj(w0) * w) / b0 - np.abs(w0) ** 2 * b / b0 ** 2
    ratio_viol = float(np.max(tangent - np.abs(w) ** 2 / b))
    tan0 = 2 * np.abs(w0) ** 2 / b0 - np.abs(w0) ** 2 * b0 / b0 ** 2
    ratio_tan = float(np.max(np.abs(tan0 - np.abs(w0) ** 2 / b0)))

    # eavesdropper WMSE tangent (quadratic part replaced by its tangent plane)
    wmse_viol = -np.inf
    wmse_tan = 0.0
    for _ in range(200):
        dim, k_users = 3, 3
        psi_root = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
        psi = psi_root @ psi_root.conj().T
        p0 = rng.standard_normal((dim, k_users)) + 1j * rng.standard_normal((dim, k_users))
        p1 = rng.standard_normal((dim, k_users)) + 1j * rng.standard_normal((dim, k_users))

        def quad(pmat):
            return sum(np.real(pmat[:, i].conj() @ psi @ pmat[:, i])
                       for i in range(k_users) if i != 1)

        def lin(pmat):
            total = 0.0
            for i in range(k_users):
                if i == 1:
                    continue
                total += 2 * np.real(p0[:, i].conj() @ psi @ pmat[:, i]) \
                    - np.real(p0[:, i].conj() @ psi @ p0[:, i])
            return total

        wmse_viol = max(wmse_viol, lin(p1) - quad(p1))
        wmse_tan = max(wmse_tan, abs(lin(p0) - quad(p0)))

    # bilinear wiretap surrogate exactly as emitted, probed against the true
    # product rho * (interference + noise): diagnostic for K >= 3
    violations = 0
    excess = 0.0
    for _ in range(n_samples // 10):
        k_users, dim = 3, 3
        h = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
        p0 = rng.standard_normal((dim, k_users)) + 1j * rng.standard_normal((dim, k_users))
        p1 = rng.standard_normal((dim, k_users)) + 1j * rng.standard_normal((dim, k_users))
        rho0 = rng.uniform(0.0, 5.0)
        rho = rng.uniform(0.0, 5.0)
        others = [2]  # k=0, j=1 leaves k'=2
        i0 = sum(abs(np.vdot(h, p0[:, kp])) ** 2 for kp in others)
        lin_i = sum(2 * np.real(np.vdot(h, p0[:, kp]).conjugate() * np.vdot(h, p1[:, kp]))
                    - abs(np.vdot(h, p0[:, kp])) ** 2 for kp in others)
        i1 = sum(abs(np.vdot(h, p1[:, kp])) ** 2 for kp in others)
        printed = rho0 * lin_i + rho * (i0 + 1.0)
        true = rho * (i1 + 1.0)
        if printed > true + 1e-9:
            violations += 1
            excess = max(excess, printed - true)

    return TaylorReport(
        exp_tangent_max_violation=exp_viol, exp_tangency_residual=exp_tan,
        ratio_tangent_max_violation=ratio_viol, ratio_tangency_residual=ratio_tan,
        wmse_tangent_max_violation=float(wmse_viol), wmse_tangency_residual=float(wmse_tan),
        bilinear_violations=violations, bilinear_max_excess=float(excess),
        samples=n_samples)


@dataclass
class RateWmmseReport:
    """Identity and minimizer checks for the closed-form equalizers/weights."""

    max_identity_residual: float
    equalizer_probe_violations: int
    weight_probe_violations: int
    instances: int

    def summary(self) -> str:
        return (f"rate-WMMSE identity over {self.instances} instances: "
                f"max residual {self.max_identity_residual:.3e}; "
                f"probe violations: equalizer {self.equalizer_probe_violations}, "
                f"weight {self.weight_probe_violations}")


def check_rate_wmmse(n_samples: int = 200, seed: int = 0,
                     n_probes: int = 100) -> RateWmmseReport:
    """Assert xi_mmse = 1 - R numerically and probe the closed forms as minimizers."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    eq_viol = 0
    w_viol = 0
    for _ in range(n_samples):
        k_users = int(rng.integers(1, 4))
        n_t = int(rng.integers(1, 5))
        h = (rng.standard_normal((k_users, n_t)) + 1j * rng.standard_normal((k_users, n_t)))
        common = rng.standard_normal(n_t) + 1j * rng.standard_normal(n_t)
        private = rng.standard_normal((n_t, k_users)) + 1j * rng.standard_normal((n_t, k_users))
        samples = h[None, :, :]
        state = update_equalizers_and_weights(common, private, samples, 1.0)

        # identity via two routes
        rate_p = np.log2(state.t_p / state.i_p)
        xi = state.om_p * state.eps_p - np.log2(state.om_p)
        worst = max(worst, float(np.max(np.abs(xi - (1 - rate_p)))))

        # equalizer probes: definitional MSE never improves under perturbation
        k = 0
        probes = [(state.g_p[0, k], state.t_p[0, k], np.vdot(h[k], private[:, k]))]
        if k_users > 1:
            # user 1 eavesdropping stream 0
            probes.append((state.g_w[0, 0, 1], state.t_w[0, 0, 1],
                           np.vdot(h[1], private[:, 0])))
        for g_star, t, cross in probes:
            eps_star = abs(g_star) ** 2 * t - 2 * np.real(g_star * cross) + 1
            for _ in range(n_probes):
                g = g_star + 0.3 * (rng.standard_normal() + 1j * rng.standard_normal())
                eps = abs(g) ** 2 * t - 2 * np.real(g * cross) + 1
                if eps < eps_star - 1e-12:
                    eq_viol += 1

        # weight probe: the closed form omega = 1/eps is the exact minimizer of
        # the nat-log weighted MSE omega*eps - ln(omega); the base-2 form of the
        # identity absorbs the dropped 1/ln2 scaling into the weight
        om_star = state.om_p[0, k]
        eps_mmse = state.eps_p[0, k]
        xi_star = om_star * eps_mmse - np.log(om_star)
        grid = om_star * np.logspace(-2, 2, n_probes)
        xi_grid = grid * eps_mmse - np.log(grid)
        if float(np.min(xi_grid)) < xi_star - 1e-9:
            w_viol += 1
    return RateWmmseReport(
        max_identity_residual=worst, equalizer_probe_violations=eq_viol,
        weight_probe_violations=w_viol, instances=n_samples)
