"""Successive convex approximation for the instantaneous weighted sum rate.

With full channel knowledge the secrecy-constrained precoder design is a
nonconvex program: log-rates, fractional SINRs and a bilinear wiretap bound.
Each iteration replaces the nonconvex pieces by tangent surrogates at the
previous iterate (exponential-cone rate links, quadratic-over-linear tangents
and a linearized bilinear wiretap row) and solves the resulting cone program,
which makes the surrogate objective nondecreasing until it stalls.

The returned solution always carries a rate breakdown recomputed from the
closed forms, never from the surrogates, plus a post-hoc check that the true
secrecy rates clear their thresholds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import conic
from .conic import ConicProblem, ScalarExpr, SolveStatus, cdot, gather_complex
from .model import ChannelSet, PrecoderSolution, SecrecySpec, compute_sinrs, wsr

__all__ = [
    "ScaState",
    "SolveOptions",
    "InfeasibleThresholds",
    "SolverFailure",
    "initialize",
    "build_subproblem",
    "iterate",
    "solve_wsr",
]


class InfeasibleThresholds(RuntimeError):
    """The secrecy thresholds admit no feasible precoder (certified by slack repair)."""


class SolverFailure(RuntimeError):
    """The cone solver failed to return a usable iterate."""


@dataclass(frozen=True)
class ScaState:
    """One iterate: precoders plus the surrogate expansion variables.

    ``alpha_*`` are rate variables (bits/channel use), ``beta_*`` the
    interference-plus-noise denominators, ``rho_*`` the SINR surrogates.
    Wiretap entries are indexed [k, j] = user-k's stream at eavesdropper j.
    """

    iteration: int
    common: np.ndarray
    private: np.ndarray
    common_rate: np.ndarray
    alpha_c: np.ndarray
    alpha_p: np.ndarray
    alpha_w: np.ndarray
    beta_c: np.ndarray
    beta_p: np.ndarray
    rho_c: np.ndarray
    rho_p: np.ndarray
    rho_w: np.ndarray
    objective: float


@dataclass(frozen=True)
class SolveOptions:
    epsilon: float = 1e-4
    max_iterations: int = 200
    kappa: float = 0.5
    noise_var: float = 1.0
    solve_tolerance: float = 1e-8
    feasibility_tol: float = 1e-3
    repair_tol: float = 1e-6
    solver: str = "clarabel"


def _pairs(n_users: int):
    return [(k, j) for k in range(n_users) for j in range(n_users) if j != k]


def initialize(channels: ChannelSet, power: float, kappa: float,
               weights=None, noise_var: float = 1.0, scheme: str = "rs") -> ScaState:
    """Starting point: common stream on the channel matrix's top singular vector.

    ``kappa`` in [0, 1] is the fraction of the power budget spent on the
    common stream; the remainder is split evenly over maximum-ratio private
    precoders.  The auxiliary variables are set so every surrogate holds with
    equality at the starting precoders.
    """
    if not 0.0 <= kappa <= 1.0:
        raise ValueError("kappa must lie in [0, 1]")
    if scheme == "mulp":
        kappa = 0.0
    h = channels.gains
    k_users, n_t = h.shape
    norms = np.linalg.norm(h, axis=1)
    if np.any(norms == 0):
        raise ValueError("all-zero user channel: singular-vector initialization undefined")
    if weights is None:
        weights = np.full(k_users, 1.0 / k_users)

    if kappa > 0:
        u_left, _, _ = np.linalg.svd(h.T, full_matrices=False)
        common = math.sqrt(kappa * power) * u_left[:, 0]
    else:
        common = np.zeros(n_t, dtype=complex)
    # maximum-ratio private directions: h_k^H p_k = ||h_k|| * amplitude
    private = (h / norms[:, None]).T * math.sqrt((1.0 - kappa) * power / k_users)

    bd = compute_sinrs(channels, common, private, noise_var)
    if scheme == "mulp":
        common_rate = np.zeros(k_users)
    else:
        common_rate = np.full(k_users, bd.rate_common.min() / k_users)

    pow_p = np.abs(h.conj() @ private) ** 2
    beta_c = pow_p.sum(axis=1) + noise_var
    beta_p = beta_c - np.diag(pow_p)
    objective = float(np.asarray(weights) @ (common_rate + bd.rate_private))
    return ScaState(
        iteration=0, common=common, private=private, common_rate=common_rate,
        alpha_c=bd.rate_common.copy(), alpha_p=bd.rate_private.copy(),
        alpha_w=bd.rate_wiretap.copy(), beta_c=beta_c, beta_p=beta_p,
        rho_c=bd.sinr_common.copy(), rho_p=bd.sinr_private.copy(),
        rho_w=bd.sinr_wiretap.copy(), objective=objective)


class _Vars:
    """Index bookkeeping for one subproblem instance."""

    def __init__(self):
        self.pc = None
        self.pk = []
        self.c = None
        self.alpha_c = None
        self.alpha_p = None
        self.alpha_w = {}
        self.beta_c = None
        self.beta_p = None
        self.rho_c = None
        self.rho_p = None
        self.rho_w = {}
        self.slack = None


def build_subproblem(state: ScaState, channels: ChannelSet, spec: SecrecySpec,
                     power: float, noise_var: float = 1.0, scheme: str = "rs",
                     slack: bool = False):
    """Convex inner approximation around ``state``.

    Returns the cone program and the variable-index map used to read the next
    iterate back out of the primal vector.  With ``slack=True`` the secrecy
    rows are relaxed by per-user slacks and the objective becomes their sum
    (the feasibility-repair probe).
    """
    h = channels.gains
    k_users, n_t = h.shape
    rs = scheme != "mulp"
    prob = ConicProblem()
    v = _Vars()
    pairs = _pairs(k_users)

    if rs:
        v.pc = prob.complex_variable("p_c", n_t)
    v.pk = [prob.complex_variable(f"p_{k}", n_t) for k in range(k_users)]
    if rs:
        v.c = prob.add_variable("c", k_users)
        v.alpha_c = prob.add_variable("alpha_c", k_users)
        v.beta_c = prob.add_variable("beta_c", k_users)
        v.rho_c = prob.add_variable("rho_c", k_users)
    v.alpha_p = prob.add_variable("alpha_p", k_users)
    v.beta_p = prob.add_variable("beta_p", k_users)
    v.rho_p = prob.add_variable("rho_p", k_users)
    # wiretap surrogates only matter for users with an active threshold; at
    # threshold 0 the whole apparatus is inert and omitted
    active = [(k, j) for k, j in pairs if spec.thresholds[k] > 0]
    for k, j in active:
        v.alpha_w[k, j] = prob.add_variable(f"alpha_w_{k}_{j}")[0]
        v.rho_w[k, j] = prob.add_variable(f"rho_w_{k}_{j}")[0]
    if slack:
        v.slack = prob.add_variable("slack", k_users)
        for k in range(k_users):
            prob.add_le(-prob.var(v.slack[k]), label="slack_nonneg")

    # secrecy rows: alpha_p,k - alpha_w[k,j] >= threshold_k
    for k, j in active:
        row = spec.thresholds[k] - prob.var(v.alpha_p[k]) + prob.var(v.alpha_w[k, j])
        if slack:
            row = row - prob.var(v.slack[k])
        prob.add_le(row, label="secrecy")

    if rs:
        # common-rate sharing and nonnegativity
        total_c = ScalarExpr()
        for k in range(k_users):
            total_c = total_c + prob.var(v.c[k])
        for k in range(k_users):
            prob.add_le(total_c - prob.var(v.alpha_c[k]), label="common_rate")
            prob.add_le(-prob.var(v.c[k]), label="c_nonneg")

    # exponential-cone rate links 1 + rho >= 2^alpha
    for k in range(k_users):
        if rs:
            conic.add_exp_rate_link(prob, prob.var(v.rho_c[k]), prob.var(v.alpha_c[k]), label="exp_link")
        conic.add_exp_rate_link(prob, prob.var(v.rho_p[k]), prob.var(v.alpha_p[k]), label="exp_link")

    # wiretap rate tangent: 1 + rho_w <= 2^{a0} (1 + ln2 (alpha_w - a0))
    for k, j in active:
        a0 = state.alpha_w[k, j]
        scale = 2.0 ** a0
        row = (1.0 + prob.var(v.rho_w[k, j])
               - scale * (1.0 + conic.LN2 * (prob.var(v.alpha_w[k, j]) - a0)))
        prob.add_le(row, label="wiretap_tangent")
        prob.add_le(-prob.var(v.rho_w[k, j]), label="rho_nonneg")

    # interference-plus-noise denominators as rotated cones
    for k in range(k_users):
        hk = h[k]
        if rs:
            terms_c = [cdot(hk, v.pk[j]) for j in range(k_users)]
            conic.add_quadratic_le_linear(prob, terms_c, noise_var,
                                          prob.var(v.beta_c[k]), label="soc_denom")
        terms_p = [cdot(hk, v.pk[j]) for j in range(k_users) if j != k]
        conic.add_quadratic_le_linear(prob, terms_p, noise_var,
                                      prob.var(v.beta_p[k]), label="soc_denom")

    # SINR tangents: 2 Re{w0^H w}/b0 - |w0|^2 b / b0^2 >= rho
    def sinr_tangent(hk, p_idx, p_ref, b0, beta_idx, rho_idx):
        w = cdot(hk, p_idx)
        w0 = np.vdot(hk, p_ref)
        lin = (w.re * (2.0 * w0.real / b0) + w.im * (2.0 * w0.imag / b0)
               - prob.var(beta_idx) * (abs(w0) ** 2 / b0 ** 2))
        prob.add_le(prob.var(rho_idx) - lin, label="sinr_tangent")

    for k in range(k_users):
        if rs:
            sinr_tangent(h[k], v.pc, state.common, state.beta_c[k], v.beta_c[k], v.rho_c[k])
        sinr_tangent(h[k], v.pk[k], state.private[:, k], state.beta_p[k], v.beta_p[k], v.rho_p[k])

    # linearized bilinear wiretap bound, emitted verbatim:
    # rho0 * sum_{k' != k,j} (2 Re{w0^H w} - |w0|^2) + rho * (I0 + sigma^2) >= |h_j^H p_k|^2
    for k, j in active:
        hj = h[j]
        rho0 = max(state.rho_w[k, j], 0.0)
        others = [kp for kp in range(k_users) if kp not in (k, j)]
        bound = ScalarExpr()
        i0 = 0.0
        for kp in others:
            w0 = np.vdot(hj, state.private[:, kp])
            w = cdot(hj, v.pk[kp])
            bound = bound + rho0 * (w.re * (2.0 * w0.real) + w.im * (2.0 * w0.imag)
                                    - abs(w0) ** 2)
            i0 += abs(w0) ** 2
        bound = bound + prob.var(v.rho_w[k, j]) * (i0 + noise_var)
        conic.add_quadratic_le_linear(prob, [cdot(hj, v.pk[k])], 0.0, bound,
                                      label="wiretap_bilinear")

    # transmit power budget
    coords = []
    if rs:
        coords.extend(prob.var(i) for i in v.pc)
    for idx in v.pk:
        coords.extend(prob.var(i) for i in idx)
    prob.add_soc(ScalarExpr.constant(math.sqrt(power)), coords, label="power")

    # objective
    if slack:
        total = ScalarExpr()
        for k in range(k_users):
            total = total + prob.var(v.slack[k])
        prob.minimize(total)
    else:
        obj = ScalarExpr()
        for k in range(k_users):
            obj = obj + spec.weights[k] * prob.var(v.alpha_p[k])
            if rs:
                obj = obj + spec.weights[k] * prob.var(v.c[k])
        prob.minimize(-1.0 * obj)
    return prob, v


def _state_from_primal(x, v: _Vars, state: ScaState, spec: SecrecySpec, scheme: str) -> ScaState:
    k_users, n_t = state.private.shape[1], state.private.shape[0]
    rs = scheme != "mulp"
    common = gather_complex(x, v.pc) if rs else np.zeros(n_t, dtype=complex)
    private = np.column_stack([gather_complex(x, idx) for idx in v.pk])
    c = np.maximum(x[v.c], 0.0) if rs else np.zeros(k_users)
    alpha_c = x[v.alpha_c] if rs else np.zeros(k_users)
    beta_c = x[v.beta_c] if rs else np.zeros(k_users)
    rho_c = x[v.rho_c] if rs else np.zeros(k_users)
    alpha_w = state.alpha_w.copy()
    rho_w = state.rho_w.copy()
    for (k, j), idx in v.alpha_w.items():
        alpha_w[k, j] = x[idx]
    for (k, j), idx in v.rho_w.items():
        rho_w[k, j] = x[idx]
    objective = float(spec.weights @ (c + x[v.alpha_p]))
    return ScaState(
        iteration=state.iteration + 1, common=common, private=private, common_rate=c,
        alpha_c=alpha_c, alpha_p=x[v.alpha_p], alpha_w=alpha_w,
        beta_c=beta_c, beta_p=x[v.beta_p], rho_c=rho_c, rho_p=x[v.rho_p],
        rho_w=rho_w, objective=objective)


def iterate(state: ScaState, channels: ChannelSet, spec: SecrecySpec, power: float,
            options: SolveOptions = SolveOptions(), scheme: str = "rs") -> ScaState:
    """One SCA step: solve the inner approximation at ``state`` and advance.

    Reduced-accuracy iterates (residual up to 1e-5) are accepted: the loop's
    safeguarded-ascent exit absorbs their noise and the final solution is
    projected back onto the power ball before rates are reported.
    """
    prob, v = build_subproblem(state, channels, spec, power, options.noise_var, scheme)
    out = conic.solve_robust(prob, options.solve_tolerance, options.solver)
    if out.status is SolveStatus.INFEASIBLE:
        raise InfeasibleThresholds(f"subproblem infeasible at iteration {state.iteration}")
    if not out.ok or out.residual > max(1e-5, 10 * options.solve_tolerance):
        raise SolverFailure(f"solver returned {out.status.value} ({out.detail}), "
                            f"residual={out.residual}")
    return _state_from_primal(out.x, v, state, spec, scheme)


def _capacity_precheck(channels: ChannelSet, spec: SecrecySpec, power: float, noise_var: float):
    """Thresholds above the single-user capacity can never be met."""
    caps = np.log2(1.0 + power * np.linalg.norm(channels.gains, axis=1) ** 2 / noise_var)
    if np.any(spec.thresholds > caps + 1e-12):
        bad = int(np.argmax(spec.thresholds - caps))
        raise InfeasibleThresholds(
            f"threshold {spec.thresholds[bad]:.4g} for user {bad} exceeds its "
            f"single-user capacity {caps[bad]:.4g}")


def _repair_initial_state(state, channels, spec, power, options, scheme) -> tuple:
    """Phase-1 loop: minimize total secrecy slack under re-linearization.

    The slack sequence is nonincreasing (each relaxed subproblem contains the
    previous optimum); a converged strictly positive slack certifies that the
    thresholds are unreachable, slack ~ 0 hands a feasible start to phase 2.
    """
    last = math.inf
    for it in range(options.max_iterations):
        prob, v = build_subproblem(state, channels, spec, power, options.noise_var,
                                   scheme, slack=True)
        out = conic.solve_robust(prob, options.solve_tolerance, options.solver)
        if not out.ok:
            raise SolverFailure(f"feasibility repair failed: {out.detail}")
        total = float(np.maximum(out.x[v.slack], 0.0).sum())
        state = _state_from_primal(out.x, v, state, spec, scheme)
        if total <= options.repair_tol:
            return state, total, it + 1
        if last - total <= 1e-9:
            break
        last = total
    raise InfeasibleThresholds(
        f"minimal secrecy slack stalled at {total:.3e} > {options.repair_tol:.1e}")


def _run(channels, spec, power, options, scheme, kappa):
    state = initialize(channels, power, kappa, spec.weights, options.noise_var, scheme)
    trace = [state.objective]
    notes = []
    converged = False
    for _ in range(options.max_iterations):
        try:
            new_state = iterate(state, channels, spec, power, options, scheme)
        except InfeasibleThresholds:
            if state.iteration == 0:
                state, slack, nrep = _repair_initial_state(state, channels, spec, power,
                                                           options, scheme)
                notes.append(f"feasibility repair: slack {slack:.2e} after {nrep} steps")
                trace = [state.objective]
                continue
            raise
        if new_state.objective < state.objective:
            # each exact subproblem solve can only improve the surrogate; a
            # drop means solver noise dominates, i.e. numerical convergence
            converged = True
            break
        trace.append(new_state.objective)
        done = abs(new_state.objective - state.objective) <= options.epsilon
        state = new_state
        if done:
            converged = True
            break
    return state, trace, notes, converged


def _project_power(common, private, power):
    """Scale the precoders onto the power ball (covers solver residual slack)."""
    total = float(np.sum(np.abs(common) ** 2) + np.sum(np.abs(private) ** 2))
    if total > power:
        scale = math.sqrt(power / total)
        return common * scale, private * scale
    return common, private


def _finalize(state, trace, notes, converged, channels, spec, power, options, scheme,
              kappa) -> PrecoderSolution:
    common, private = _project_power(state.common, state.private, power)
    state = replace(state, common=common, private=private)
    bd = compute_sinrs(channels, state.common, state.private, options.noise_var)
    c = np.maximum(state.common_rate, 0.0)
    violation = float(np.max(spec.thresholds - bd.secrecy, initial=0.0))
    feasible = violation <= options.feasibility_tol
    return PrecoderSolution(
        scheme=scheme, common=state.common, private=state.private, common_rate=c,
        wsr=wsr(bd, c, spec.weights), breakdown=bd, iterations=state.iteration,
        converged=converged, feasible=feasible, objective_trace=tuple(trace),
        notes=tuple(notes),
        extras={"kappa": kappa, "surrogate_wsr": state.objective,
                "secrecy_violation": violation})


def solve_wsr(channels: ChannelSet, spec: SecrecySpec, power: float,
              options: SolveOptions | None = None, scheme: str = "rs") -> PrecoderSolution:
    """Maximize the weighted sum rate subject to per-user secrecy thresholds.

    Iterates the convex inner approximation until the surrogate objective
    changes by at most ``options.epsilon``.  The result reports true rates; if
    their secrecy falls short of a threshold by more than ``feasibility_tol``
    the solve is retried once from the alternate power split, and the result
    is flagged infeasible only when both attempts fall short.
    """
    options = options or SolveOptions()
    if spec.n_users != channels.n_users:
        raise ValueError("secrecy spec and channel set disagree on the number of users")
    _capacity_precheck(channels, spec, power, options.noise_var)

    kappa = 0.0 if scheme == "mulp" else options.kappa
    solution = _finalize(*_run(channels, spec, power, options, scheme, kappa),
                         channels, spec, power, options, scheme, kappa)
    if solution.feasible or np.all(spec.thresholds == 0):
        return solution

    kappa_alt = 0.2 if kappa >= 0.5 else 0.8
    retry = _finalize(*_run(channels, spec, power, options, scheme, kappa_alt),
                      channels, spec, power, options, scheme, kappa_alt)
    retry = replace(retry, notes=retry.notes + ("re-solved from alternate kappa",))
    if retry.feasible and not solution.feasible:
        return retry
    if solution.feasible and not retry.feasible:
        return solution
    if retry.feasible and solution.feasible:
        return max(solution, retry, key=lambda s: s.wsr)
    best = min(solution, retry, key=lambda s: s.extras["secrecy_violation"])
    return replace(best, notes=best.notes + ("secrecy verification failed",))
