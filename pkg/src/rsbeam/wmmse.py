"""Weighted-MMSE alternating optimization for the average sum rate under imperfect CSIT.

With only a channel estimate at the transmitter, the design target is the
weighted average sum rate (WASR) over the estimation-error distribution for
that estimate.  The expectation is replaced by a sample average over M
conditional channel draws (fixed for the whole run so the objective is
deterministic), and each stream's log-rate is rewritten through the
rate-WMMSE identity xi_mmse = 1 - R: closed-form per-sample equalizers and
weights make the remaining precoder problem quadratic.  The loop alternates

  outer: refresh per-sample MMSE equalizers/weights and their sample averages,
  inner: successive convex solves of the precoder subproblem, in which only
         the eavesdropper WMSE is linearized around the latest iterate.

Secrecy and common-rate sharing enter through the same identity; the final
report always recomputes sample-average rates from the closed forms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import conic
from .conic import ConicProblem, ScalarExpr, SolveStatus, cdot, gather_complex
from .model import (
    ChannelSet,
    CsitModel,
    PrecoderSolution,
    RateBreakdown,
    SecrecySpec,
    sample_csit,
    stack_channels,
)
from .sca import InfeasibleThresholds, SolverFailure, _project_power, initialize

__all__ = [
    "MmseState",
    "AveragedCoefficients",
    "AoState",
    "WesrOptions",
    "update_equalizers_and_weights",
    "rate_wmmse_gap",
    "compute_averages",
    "build_inner_subproblem",
    "saf_breakdown",
    "solve_wesr",
]

@dataclass(frozen=True)
class MmseState:
    """Per-sample MMSE equalizers, weights and power terms.

    Arrays are indexed [m, k] for the common/private streams of user k and
    [m, k, j] for user-k's stream as decoded by eavesdropper j (diagonal
    unused).  ``t_*`` are total received powers, ``i_*`` the interference
    parts, ``eps_*`` the per-sample MMSEs.
    """

    g_c: np.ndarray
    g_p: np.ndarray
    g_w: np.ndarray
    om_c: np.ndarray
    om_p: np.ndarray
    om_w: np.ndarray
    t_c: np.ndarray
    t_p: np.ndarray
    t_w: np.ndarray
    i_c: np.ndarray
    i_p: np.ndarray
    i_w: np.ndarray
    eps_c: np.ndarray
    eps_p: np.ndarray
    eps_w: np.ndarray


def _stream_powers(samples: np.ndarray, common: np.ndarray, private: np.ndarray):
    """z_c[m,k] = h_k^(m)H p_c ; z_p[m,k,j] = h_k^(m)H p_j."""
    z_c = np.einsum("mkt,t->mk", samples.conj(), common)
    z_p = np.einsum("mkt,tj->mkj", samples.conj(), private)
    return z_c, z_p


def update_equalizers_and_weights(common: np.ndarray, private: np.ndarray,
                                  samples: np.ndarray, noise_var: float = 1.0) -> MmseState:
    """Closed-form MMSE equalizers g = p^H h / T and weights omega = T / I per sample.

    ``samples`` is the stacked (M, K, N_t) array of conditional channel draws.
    The common stream sees everything; each private stream has the common part
    removed; an eavesdropper additionally removes its own private stream.
    """
    m_count, k_users, _ = samples.shape
    z_c, z_p = _stream_powers(samples, common, private)
    a_c = np.abs(z_c) ** 2
    a_p = np.abs(z_p) ** 2

    t_c = a_c + a_p.sum(axis=2) + noise_var
    t_p = t_c - a_c
    i_p = t_p - a_p[:, np.arange(k_users), np.arange(k_users)]
    #  t_eav[m, j]: total power at user j after removing common and own private
    t_eav = i_p
    # wiretap layout [m, k, j]: stream k at user j; diagonal entries are
    # placeholders (own stream is no wiretap) pinned to the identity values
    t_w = np.broadcast_to(t_eav[:, None, :], (m_count, k_users, k_users)).copy()
    i_w = t_w - np.swapaxes(a_p, 1, 2)
    diag = np.arange(k_users)
    i_w[:, diag, diag] = t_w[:, diag, diag]

    g_c = z_c.conj() / t_c
    g_p = z_p[:, np.arange(k_users), np.arange(k_users)].conj() / t_p
    g_w = np.swapaxes(z_p, 1, 2).conj() / t_w
    g_w[:, diag, diag] = 0.0

    eps_c = t_p / t_c  # the common stream's interference is the whole private+noise power
    eps_p = i_p / t_p
    eps_w = i_w / t_w
    return MmseState(
        g_c=g_c, g_p=g_p, g_w=g_w,
        om_c=1.0 / eps_c, om_p=1.0 / eps_p, om_w=1.0 / eps_w,
        t_c=t_c, t_p=t_p, t_w=t_w, i_c=t_p, i_p=i_p, i_w=i_w,
        eps_c=eps_c, eps_p=eps_p, eps_w=eps_w)


def _mse_from_definition(g, t, cross):
    """eps = |g|^2 T - 2 Re{g * cross} + 1 with cross = h^H p of the decoded stream."""
    return np.abs(g) ** 2 * t - 2.0 * np.real(g * cross) + 1.0


def rate_wmmse_gap(common: np.ndarray, private: np.ndarray, channels: ChannelSet,
                   noise_var: float = 1.0) -> dict:
    """Residuals |xi_mmse - (1 - R)| per stream for one channel realization.

    xi is evaluated from the definitional mean-square error (quadratic in the
    equalizer), the rate from the SINR closed form, so the two sides of the
    identity take independent computation routes.
    """
    samples = channels.gains[None, :, :]
    k_users = channels.n_users
    state = update_equalizers_and_weights(common, private, samples, noise_var)
    z_c, z_p = _stream_powers(samples, common, private)

    eps_c = _mse_from_definition(state.g_c, state.t_c, z_c)
    eps_p = _mse_from_definition(state.g_p, state.t_p,
                                 z_p[:, np.arange(k_users), np.arange(k_users)])
    cross_w = np.swapaxes(z_p, 1, 2)
    eps_w = _mse_from_definition(state.g_w, state.t_w, cross_w)

    xi_c = state.om_c * eps_c - np.log2(state.om_c)
    xi_p = state.om_p * eps_p - np.log2(state.om_p)
    xi_w = state.om_w * eps_w - np.log2(state.om_w)

    rate_c = np.log2(state.t_c / state.i_c)
    rate_p = np.log2(state.t_p / state.i_p)
    rate_w = np.log2(state.t_w / state.i_w)

    off = ~np.eye(k_users, dtype=bool)
    return {
        "common": np.abs(xi_c - (1.0 - rate_c))[0],
        "private": np.abs(xi_p - (1.0 - rate_p))[0],
        "wiretap": np.abs(xi_w - (1.0 - rate_w))[0][off],
    }


@dataclass(frozen=True)
class AveragedCoefficients:
    """Sample means of the WMSE expansion coefficients.

    Per stream family: ``t`` = mean(omega |g|^2), ``psi`` = mean(t_m h h^H)
    (Hermitian PSD), ``f`` = mean(omega h conj(g)), ``u`` = mean(omega),
    ``v`` = mean(log2 omega).  Wiretap entries [k, j] use eavesdropper j's
    channel draws.
    """

    t_c: np.ndarray
    psi_c: np.ndarray
    f_c: np.ndarray
    u_c: np.ndarray
    v_c: np.ndarray
    t_p: np.ndarray
    psi_p: np.ndarray
    f_p: np.ndarray
    u_p: np.ndarray
    v_p: np.ndarray
    t_w: np.ndarray
    psi_w: np.ndarray
    f_w: np.ndarray
    u_w: np.ndarray
    v_w: np.ndarray


def compute_averages(state: MmseState, samples: np.ndarray) -> AveragedCoefficients:
    """Arithmetic means of the per-sample coefficients (M >= 1)."""
    m_count = samples.shape[0]
    outer = np.einsum("mkt,mks->mkts", samples, samples.conj())  # h h^H per sample/user

    def family(g, om):
        t_m = om * np.abs(g) ** 2
        psi = np.einsum("mk,mkts->kts", t_m, outer) / m_count
        f = np.einsum("mk,mkt,mk->kt", om, samples, g.conj()) / m_count
        return t_m.mean(axis=0), psi, f, om.mean(axis=0), np.log2(om).mean(axis=0)

    t_c, psi_c, f_c, u_c, v_c = family(state.g_c, state.om_c)
    t_p, psi_p, f_p, u_p, v_p = family(state.g_p, state.om_p)

    # wiretap family over ordered pairs: channel of the eavesdropper j
    t_wm = state.om_w * np.abs(state.g_w) ** 2
    t_w = t_wm.mean(axis=0)
    psi_w = np.einsum("mkj,mjts->kjts", t_wm, outer) / m_count
    f_w = np.einsum("mkj,mjt,mkj->kjt", state.om_w, samples, state.g_w.conj()) / m_count
    u_w = state.om_w.mean(axis=0)
    v_w = np.log2(state.om_w).mean(axis=0)
    return AveragedCoefficients(
        t_c=t_c, psi_c=psi_c, f_c=f_c, u_c=u_c, v_c=v_c,
        t_p=t_p, psi_p=psi_p, f_p=f_p, u_p=u_p, v_p=v_p,
        t_w=t_w, psi_w=psi_w, f_w=f_w, u_w=u_w, v_w=v_w)


def _psi_factor(psi: np.ndarray) -> np.ndarray:
    """Rows C with C^H C = psi for a Hermitian PSD matrix (eigen square root)."""
    vals, vecs = np.linalg.eigh(psi)
    vals = np.clip(vals, 0.0, None)
    return (np.sqrt(vals)[:, None] * vecs.conj().T)


@dataclass(frozen=True)
class AoState:
    """Outer-loop iterate: precoders, negated common-rate vector and traces."""

    iteration: int
    common: np.ndarray
    private: np.ndarray
    xbar: np.ndarray
    objective: float
    wasr: float


@dataclass(frozen=True)
class WesrOptions:
    epsilon_outer: float = 1e-4
    epsilon_inner: float = 1e-5
    max_outer: int = 200
    max_inner: int = 50
    kappa: float = 0.5
    noise_var: float = 1.0
    solve_tolerance: float = 1e-8
    feasibility_tol: float = 1e-3
    repair_tol: float = 1e-6
    sample_seed: int = 0
    solver: str = "clarabel"


class _InnerVars:
    def __init__(self):
        self.pc = None
        self.pk = []
        self.xbar = None
        self.alpha_w = {}
        self.s_p = None
        self.s_c = None
        self.slack = None


def build_inner_subproblem(expansion_common: np.ndarray, expansion_private: np.ndarray,
                           averages: AveragedCoefficients, spec: SecrecySpec, power: float,
                           noise_var: float = 1.0, scheme: str = "rs", slack: bool = False):
    """Quadratic precoder subproblem for fixed equalizers/weights (linear + SOC only).

    The private and common WMSEs enter exactly through epigraph variables;
    only the eavesdropper WMSE is replaced by its tangent at the expansion
    precoders (a global lower bound since the quadratic part is PSD).
    """
    k_users = spec.n_users
    n_t = expansion_private.shape[0]
    rs = scheme != "mulp"
    prob = ConicProblem()
    v = _InnerVars()
    pairs = [(k, j) for k in range(k_users) for j in range(k_users) if j != k]

    if rs:
        v.pc = prob.complex_variable("p_c", n_t)
        v.xbar = prob.add_variable("xbar", k_users)
        v.s_c = prob.add_variable("s_c", k_users)
    v.pk = [prob.complex_variable(f"p_{k}", n_t) for k in range(k_users)]
    v.s_p = prob.add_variable("s_p", k_users)
    for k, j in pairs:
        if spec.thresholds[k] > 0:
            v.alpha_w[k, j] = prob.add_variable(f"alpha_w_{k}_{j}")[0]
    if slack:
        v.slack = prob.add_variable("slack", k_users)
        for k in range(k_users):
            prob.add_le(-prob.var(v.slack[k]), label="slack_nonneg")

    def linear_tail(f_vec, p_idx, u_bar, v_bar, t_bar):
        """-2 Re{f^H p} + u - v + t*sigma^2 as a ScalarExpr."""
        w = cdot(f_vec, p_idx)
        return w.re * (-2.0) + (u_bar - v_bar + t_bar * noise_var)

    # private WMSE epigraphs: xi_p,k(P) <= s_p,k
    for k in range(k_users):
        rows = _psi_factor(averages.psi_p[k])
        terms = [cdot(rows[r].conj(), v.pk[kp]) for kp in range(k_users)
                 for r in range(n_t)]
        tail = linear_tail(averages.f_p[k], v.pk[k], averages.u_p[k], averages.v_p[k],
                           averages.t_p[k])
        bound = prob.var(v.s_p[k]) - tail
        conic.add_quadratic_le_linear(prob, terms, 0.0, bound, label="private_wmse")

    if rs:
        # common WMSE epigraphs: xi_c,k(P) <= s_c,k (common + all privates in the quad)
        for k in range(k_users):
            rows = _psi_factor(averages.psi_c[k])
            terms = [cdot(rows[r].conj(), v.pc) for r in range(n_t)]
            terms += [cdot(rows[r].conj(), v.pk[kp]) for kp in range(k_users)
                      for r in range(n_t)]
            tail = linear_tail(averages.f_c[k], v.pc, averages.u_c[k], averages.v_c[k],
                               averages.t_c[k])
            bound = prob.var(v.s_c[k]) - tail
            conic.add_quadratic_le_linear(prob, terms, 0.0, bound, label="common_wmse")

        # common-rate rows: -sum_j X_j + xi_c,k <= 1 ; xbar <= 0
        total_x = ScalarExpr()
        for k in range(k_users):
            total_x = total_x + prob.var(v.xbar[k])
        for k in range(k_users):
            prob.add_le(prob.var(v.s_c[k]) - total_x - 1.0, label="common_rate")
            prob.add_le(prob.var(v.xbar[k]), label="xbar_nonpos")

    # linearized eavesdropper WMSE >= alpha_w[k,j]; secrecy: s_p,k - alpha_w <= -R_th
    for k, j in pairs:
        th = spec.thresholds[k]
        if th <= 0:
            continue
        psi = averages.psi_w[k, j]
        lin = ScalarExpr.constant(averages.u_w[k, j] - averages.v_w[k, j]
                                  + averages.t_w[k, j] * noise_var)
        for i in range(k_users):
            if i == j:
                continue
            p0 = expansion_private[:, i]
            grad = psi @ p0  # d/dp of p^H psi p at p0 (times 1/2)
            w = cdot(grad, v.pk[i])
            lin = lin + 2.0 * w.re - float(np.real(np.vdot(p0, grad)))
        fw = cdot(averages.f_w[k, j], v.pk[k])
        lin = lin + fw.re * (-2.0)
        prob.add_le(prob.var(v.alpha_w[k, j]) - lin, label="wiretap_tangent")

        row = prob.var(v.s_p[k]) - prob.var(v.alpha_w[k, j]) + th
        if slack:
            row = row - prob.var(v.slack[k])
        prob.add_le(row, label="secrecy")

    # power budget
    coords = []
    if rs:
        coords.extend(prob.var(i) for i in v.pc)
    for idx in v.pk:
        coords.extend(prob.var(i) for i in idx)
    prob.add_soc(ScalarExpr.constant(math.sqrt(power)), coords, label="power")

    if slack:
        total = ScalarExpr()
        for k in range(k_users):
            total = total + prob.var(v.slack[k])
        prob.minimize(total)
    else:
        obj = ScalarExpr()
        for k in range(k_users):
            obj = obj + spec.weights[k] * prob.var(v.s_p[k])
            if rs:
                obj = obj + spec.weights[k] * prob.var(v.xbar[k])
        prob.minimize(obj)
    return prob, v


def saf_breakdown(samples: np.ndarray, common: np.ndarray, private: np.ndarray,
                  noise_var: float = 1.0) -> RateBreakdown:
    """Sample-average rates: mean over draws of the closed-form instantaneous rates."""
    m_count, k_users, _ = samples.shape
    z_c, z_p = _stream_powers(samples, common, private)
    a_c = np.abs(z_c) ** 2
    a_p = np.abs(z_p) ** 2
    total = a_p.sum(axis=2)
    own = a_p[:, np.arange(k_users), np.arange(k_users)]

    sinr_c = a_c / (total + noise_var)
    sinr_p = own / (total - own + noise_var)
    # wiretap [m, k, j]: stream k at user j; diagonal excluded
    a_t = np.swapaxes(a_p, 1, 2).copy()
    diag = np.arange(k_users)
    a_t[:, diag, diag] = 0.0
    denom = (total - own)[:, None, :] - a_t + noise_var
    sinr_w = a_t / denom

    rate_c = np.log2(1 + sinr_c).mean(axis=0)
    rate_p = np.log2(1 + sinr_p).mean(axis=0)
    rate_w = np.log2(1 + sinr_w).mean(axis=0)
    np.fill_diagonal(rate_w, 0.0)
    off = ~np.eye(k_users, dtype=bool)
    if k_users > 1:
        best = np.where(off, rate_w, -np.inf).max(axis=1)
        secrecy = np.maximum(rate_p - np.maximum(best, 0.0), 0.0)
    else:
        secrecy = rate_p.copy()
    mean_sinr_w = sinr_w.mean(axis=0)
    np.fill_diagonal(mean_sinr_w, 0.0)
    return RateBreakdown(
        sinr_common=sinr_c.mean(axis=0), sinr_private=sinr_p.mean(axis=0),
        sinr_wiretap=mean_sinr_w, rate_common=rate_c, rate_private=rate_p,
        rate_wiretap=rate_w, secrecy=secrecy, noise_var=float(noise_var))


def _wasr(samples, common, private, xbar, weights, noise_var) -> float:
    bd = saf_breakdown(samples, common, private, noise_var)
    return float(weights @ (np.maximum(-xbar, 0.0) + bd.rate_private))


def _solve_inner(prob, v, options):
    out = conic.solve_robust(prob, options.solve_tolerance, options.solver)
    if out.status is SolveStatus.INFEASIBLE:
        raise InfeasibleThresholds("inner precoder subproblem infeasible")
    if not out.ok or out.residual > max(1e-5, 10 * options.solve_tolerance):
        raise SolverFailure(f"inner solve failed: {out.status.value} ({out.detail})")
    return out


def _repair_inner(expansion_common, expansion_private, averages, spec, power, options,
                  scheme):
    """Slack phase for the inner problem; certifies thresholds unreachable if it stalls."""
    common, private = expansion_common, expansion_private
    last = math.inf
    for _ in range(options.max_inner):
        prob, v = build_inner_subproblem(common, private, averages, spec, power,
                                         options.noise_var, scheme, slack=True)
        out = conic.solve_robust(prob, options.solve_tolerance, options.solver)
        if not out.ok:
            raise SolverFailure(f"inner feasibility repair failed: {out.detail}")
        total = float(np.maximum(out.x[v.slack], 0.0).sum())
        common = gather_complex(out.x, v.pc) if scheme != "mulp" else common
        private = np.column_stack([gather_complex(out.x, idx) for idx in v.pk])
        if total <= options.repair_tol:
            return common, private
        if last - total <= 1e-9:
            break
        last = total
    raise InfeasibleThresholds(
        f"inner secrecy slack stalled at {total:.3e} > {options.repair_tol:.1e}")


def solve_wesr(csit: CsitModel, spec: SecrecySpec, power: float, n_samples: int,
               options: WesrOptions | None = None, scheme: str = "rs") -> PrecoderSolution:
    """Maximize the weighted average sum rate for one channel estimate.

    Draws ``n_samples`` conditional channel realizations once (seeded), then
    alternates closed-form equalizer/weight refreshes with inner SCA solves of
    the precoder subproblem until the WASR stabilizes.  The returned
    breakdown holds sample-average rates recomputed from closed forms, with
    the post-hoc secrecy margin checked on those rates.
    """
    options = options or WesrOptions()
    if spec.n_users != csit.estimate.n_users:
        raise ValueError("secrecy spec and channel estimate disagree on the number of users")
    samples = stack_channels(sample_csit(csit, n_samples, options.sample_seed))
    k_users = spec.n_users

    state0 = initialize(csit.estimate, power, options.kappa, spec.weights,
                        options.noise_var, scheme)
    common, private = state0.common, state0.private
    bd0 = saf_breakdown(samples, common, private, options.noise_var)
    cbar = (np.full(k_users, bd0.rate_common.min() / k_users) if scheme != "mulp"
            else np.zeros(k_users))
    xbar = -cbar
    wasr_trace = [float(spec.weights @ (cbar + bd0.rate_private))]
    outer_trace: list[float] = []
    inner_counts: list[int] = []
    notes: list[str] = []
    converged = False
    committed_mmse = None

    for outer in range(options.max_outer):
        mmse = update_equalizers_and_weights(common, private, samples, options.noise_var)
        averages = compute_averages(mmse, samples)

        inner_obj = math.inf
        exp_common, exp_private = common, private
        exp_xbar = xbar
        inner_used = 0
        repaired = False
        for inner in range(options.max_inner):
            prob, v = build_inner_subproblem(exp_common, exp_private, averages, spec,
                                             power, options.noise_var, scheme)
            try:
                out = _solve_inner(prob, v, options)
            except InfeasibleThresholds:
                exp_common, exp_private = _repair_inner(exp_common, exp_private, averages,
                                                        spec, power, options, scheme)
                notes.append(f"inner feasibility repair at outer {outer}")
                repaired = True
                continue
            new_obj = out.objective
            exp_common = gather_complex(out.x, v.pc) if scheme != "mulp" else exp_common
            exp_private = np.column_stack([gather_complex(out.x, idx) for idx in v.pk])
            if scheme != "mulp":
                exp_xbar = np.minimum(out.x[v.xbar], 0.0)
            inner_used = inner + 1
            if abs(new_obj - inner_obj) <= options.epsilon_inner:
                inner_obj = new_obj
                break
            inner_obj = new_obj

        if outer_trace and not repaired and inner_obj > outer_trace[-1]:
            # an exact refresh + inner solve can only lower the objective; a
            # rise without a repair jump means solver noise dominates: stop at
            # the previous iterate
            converged = True
            break
        common, private, xbar = exp_common, exp_private, exp_xbar
        committed_mmse = mmse
        outer_trace.append(inner_obj)
        inner_counts.append(inner_used)
        wasr = _wasr(samples, common, private, xbar, spec.weights, options.noise_var)
        wasr_trace.append(wasr)
        if abs(wasr_trace[-1] - wasr_trace[-2]) <= options.epsilon_outer:
            converged = True
            break

    common, private = _project_power(common, private, power)
    bd = saf_breakdown(samples, common, private, options.noise_var)
    cbar = np.maximum(-xbar, 0.0)
    violation = float(np.max(spec.thresholds - bd.secrecy, initial=0.0))
    feasible = violation <= options.feasibility_tol
    if not feasible:
        notes.append("secrecy verification failed on sample-average rates")
    gap = (_stationarity_gap_nats(samples, common, private, committed_mmse,
                                  spec.weights, options.noise_var)
           if committed_mmse is not None else math.inf)
    return PrecoderSolution(
        scheme=scheme, common=common, private=private, common_rate=cbar,
        wsr=float(spec.weights @ (cbar + bd.rate_private)), breakdown=bd,
        iterations=len(outer_trace), converged=converged, feasible=feasible,
        objective_trace=tuple(wasr_trace), notes=tuple(notes),
        extras={"outer_objective_trace": tuple(outer_trace),
                "inner_iterations": tuple(inner_counts),
                "sample_seed": options.sample_seed,
                "n_samples": n_samples,
                "secrecy_violation": violation,
                "stationarity_gap_nats": gap})


def _stationarity_gap_nats(samples, common, private, stale: MmseState, weights,
                           noise_var) -> float:
    """Objective change from re-deriving equalizers/weights at the returned precoders.

    Measured on the nat-log weighted MSE (omega*eps - ln omega), for which the
    closed forms are the exact pointwise minimizers, so the gap is nonnegative
    and vanishes at the alternating fixed point.  The base-2 identity form
    carries the deliberately dropped 1/ln2 weight scaling and would stall at a
    first-order offset instead.
    """
    k_users = samples.shape[1]
    _, z_p = _stream_powers(samples, common, private)
    cross = z_p[:, np.arange(k_users), np.arange(k_users)]
    t_p = (np.abs(z_p) ** 2).sum(axis=2) + noise_var
    eps_stale = np.abs(stale.g_p) ** 2 * t_p - 2 * np.real(stale.g_p * cross) + 1.0
    xi_stale = stale.om_p * eps_stale - np.log(stale.om_p)
    fresh = update_equalizers_and_weights(common, private, samples, noise_var)
    xi_fresh = fresh.om_p * fresh.eps_p - np.log(fresh.om_p)
    delta = (xi_stale - xi_fresh).mean(axis=0)
    return float(np.asarray(weights) @ delta)
