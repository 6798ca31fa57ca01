"""Canonical convex cone subproblem and solver bindings.

Both optimizer loops lower their iterations to one shared form: a linear
objective over a real decision vector (complex precoders are stored as
interleaved real/imaginary coordinates) with linear equality/inequality rows,
second-order cones, rotated second-order cones and exponential cones.  The
default backend is Clarabel through its direct Python bindings; a cvxpy
translation path is kept as an independent cross-check solver.

Every block carries a short label so callers can audit constraint counts per
family, and ``ConicProblem.residual`` re-evaluates all blocks at a candidate
point, which is how solve outcomes are verified.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy import sparse

__all__ = [
    "ScalarExpr",
    "ComplexExpr",
    "ConicProblem",
    "SolveOutcome",
    "SolveStatus",
    "cdot",
    "gather_complex",
    "add_quadratic_le_linear",
    "add_exp_rate_link",
    "solve",
]

LN2 = math.log(2.0)


class ScalarExpr:
    """Sparse real affine expression sum_i coef[i] * x[i] + const."""

    __slots__ = ("coef", "const")

    def __init__(self, coef=None, const=0.0):
        self.coef = dict(coef) if coef else {}
        self.const = float(const)

    @classmethod
    def constant(cls, value) -> "ScalarExpr":
        return cls(None, value)

    def copy(self) -> "ScalarExpr":
        return ScalarExpr(self.coef, self.const)

    def __add__(self, other):
        out = self.copy()
        if isinstance(other, ScalarExpr):
            for i, c in other.coef.items():
                out.coef[i] = out.coef.get(i, 0.0) + c
            out.const += other.const
        else:
            out.const += float(other)
        return out

    __radd__ = __add__

    def __neg__(self):
        return ScalarExpr({i: -c for i, c in self.coef.items()}, -self.const)

    def __sub__(self, other):
        if isinstance(other, ScalarExpr):
            return self + (-other)
        return self + (-float(other))

    def __rsub__(self, other):
        return (-self) + float(other)

    def __mul__(self, scalar):
        s = float(scalar)
        return ScalarExpr({i: s * c for i, c in self.coef.items()}, s * self.const)

    __rmul__ = __mul__

    def value(self, x: np.ndarray) -> float:
        return self.const + sum(c * x[i] for i, c in self.coef.items())

    def dense(self, n: int) -> np.ndarray:
        row = np.zeros(n)
        for i, c in self.coef.items():
            row[i] = c
        return row

    def __repr__(self):
        terms = " + ".join(f"{c:g}*x[{i}]" for i, c in sorted(self.coef.items()))
        if not terms:
            return f"{self.const:g}"
        return f"{terms} + {self.const:g}" if self.const else terms


@dataclass(frozen=True)
class ComplexExpr:
    """Complex affine scalar split into real and imaginary affine parts."""

    re: ScalarExpr
    im: ScalarExpr

    def value(self, x: np.ndarray) -> complex:
        return complex(self.re.value(x), self.im.value(x))


def cdot(a: np.ndarray, p_indices: np.ndarray) -> ComplexExpr:
    """Hermitian inner product a^H p as a ComplexExpr.

    ``p_indices`` are the interleaved real/imag coordinates of the complex
    variable p (as returned by ``ConicProblem.complex_variable``).
    """
    a = np.asarray(a, dtype=complex).reshape(-1)
    if 2 * a.shape[0] != len(p_indices):
        raise ValueError("coefficient vector and complex variable dimension mismatch")
    re = {}
    im = {}
    for t, at in enumerate(a):
        ir, ii = int(p_indices[2 * t]), int(p_indices[2 * t + 1])
        # conj(a_t) * (pr + j pi) = (ar*pr + ai*pi) + j(ar*pi - ai*pr)
        re[ir] = re.get(ir, 0.0) + at.real
        re[ii] = re.get(ii, 0.0) + at.imag
        im[ii] = im.get(ii, 0.0) + at.real
        im[ir] = im.get(ir, 0.0) - at.imag
    return ComplexExpr(ScalarExpr(re), ScalarExpr(im))


def gather_complex(x: np.ndarray, indices: np.ndarray) -> np.ndarray:
    """Reassemble a complex vector from its interleaved coordinates in ``x``."""
    return x[indices[0::2]] + 1j * x[indices[1::2]]


class SolveStatus(Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    MAX_ITERATIONS = "max_iterations"
    NUMERICAL_FAILURE = "numerical_failure"


@dataclass
class SolveOutcome:
    status: SolveStatus
    x: np.ndarray | None
    objective: float | None
    residual: float | None
    detail: str = ""

    @property
    def ok(self) -> bool:
        return self.status in (SolveStatus.OPTIMAL, SolveStatus.MAX_ITERATIONS) and self.x is not None


class ConicProblem:
    """Builder for one convex subproblem in canonical cone form (minimization)."""

    def __init__(self):
        self.n = 0
        self._vars: list[tuple[str, int, int]] = []  # (name, offset, size)
        self.objective = ScalarExpr()
        self._eq: list[tuple[ScalarExpr, str]] = []
        self._le: list[tuple[ScalarExpr, str]] = []
        self._soc: list[tuple[ScalarExpr, list[ScalarExpr], str]] = []
        self._rsoc: list[tuple[list[ScalarExpr], ScalarExpr, ScalarExpr, str]] = []
        self._exp: list[tuple[ScalarExpr, ScalarExpr, ScalarExpr, str]] = []

    # -- variables ---------------------------------------------------------
    def add_variable(self, name: str, size: int = 1) -> np.ndarray:
        idx = np.arange(self.n, self.n + size)
        self._vars.append((name, self.n, size))
        self.n += size
        return idx

    def complex_variable(self, name: str, dim: int) -> np.ndarray:
        """Complex vector variable of length ``dim`` stored as 2*dim interleaved reals."""
        return self.add_variable(name, 2 * dim)

    def var(self, index: int) -> ScalarExpr:
        return ScalarExpr({int(index): 1.0})

    # -- objective and blocks ------------------------------------------------
    def minimize(self, expr: ScalarExpr) -> None:
        if not np.isfinite(expr.const) or not all(np.isfinite(c) for c in expr.coef.values()):
            raise ValueError("objective must be finite")
        self.objective = expr.copy()

    def add_eq(self, expr: ScalarExpr, label: str = "eq"):
        self._eq.append((expr.copy(), label))
        return ("eq", len(self._eq) - 1)

    def add_le(self, expr: ScalarExpr, label: str = "le"):
        """expr <= 0."""
        self._le.append((expr.copy(), label))
        return ("le", len(self._le) - 1)

    def add_soc(self, bound: ScalarExpr, vec: list[ScalarExpr], label: str = "soc"):
        """||vec||_2 <= bound."""
        self._soc.append((bound.copy(), [v.copy() for v in vec], label))
        return ("soc", len(self._soc) - 1)

    def add_rotated(self, vec: list[ScalarExpr], u: ScalarExpr, v: ScalarExpr, label: str = "rsoc"):
        """||vec||_2^2 <= u * v with u, v >= 0 implied."""
        self._rsoc.append(([w.copy() for w in vec], u.copy(), v.copy(), label))
        return ("rsoc", len(self._rsoc) - 1)

    def add_exp(self, x: ScalarExpr, y: ScalarExpr, z: ScalarExpr, label: str = "exp"):
        """Exponential-cone membership y * e^{z/y} <= x with y > 0."""
        self._exp.append((x.copy(), y.copy(), z.copy(), label))
        return ("exp", len(self._exp) - 1)

    # -- introspection -------------------------------------------------------
    def counts(self) -> dict:
        out: dict[str, int] = {}
        for group in (self._eq, self._le):
            for _, label in group:
                out[label] = out.get(label, 0) + 1
        for block in self._soc:
            out[block[-1]] = out.get(block[-1], 0) + 1
        for block in self._rsoc:
            out[block[-1]] = out.get(block[-1], 0) + 1
        for block in self._exp:
            out[block[-1]] = out.get(block[-1], 0) + 1
        return out

    @property
    def cones_used(self) -> set:
        used = set()
        if self._eq or self._le:
            used.add("linear")
        if self._soc or self._rsoc:
            used.add("soc")
        if self._exp:
            used.add("exp")
        return used

    # -- evaluation ----------------------------------------------------------
    def residual(self, x: np.ndarray) -> float:
        """Worst feasibility violation of all blocks at ``x`` (0 when feasible)."""
        worst = 0.0
        for expr, _ in self._eq:
            worst = max(worst, abs(expr.value(x)))
        for expr, _ in self._le:
            worst = max(worst, expr.value(x))
        for bound, vec, _ in self._soc:
            norm = math.sqrt(sum(v.value(x) ** 2 for v in vec))
            worst = max(worst, norm - bound.value(x))
        for vec, u, v, _ in self._rsoc:
            uu, vv = u.value(x), v.value(x)
            sq = sum(w.value(x) ** 2 for w in vec)
            worst = max(worst, sq - uu * vv, -uu, -vv)
        for xe, ye, ze, _ in self._exp:
            xv, yv, zv = xe.value(x), ye.value(x), ze.value(x)
            if yv <= 0:
                worst = max(worst, -yv if yv < 0 else 1.0)
            else:
                worst = max(worst, yv * math.exp(zv / yv) - xv)
        return max(worst, 0.0)

    def dump(self) -> str:
        """Self-describing text form for cross-solver verification."""
        out = io.StringIO()
        out.write(f"conic problem: {self.n} variables\n")
        for name, off, size in self._vars:
            out.write(f"  var {name}: offset {off} size {size}\n")
        out.write(f"minimize {self.objective!r}\n")
        for expr, label in self._eq:
            out.write(f"eq[{label}]: {expr!r} == 0\n")
        for expr, label in self._le:
            out.write(f"le[{label}]: {expr!r} <= 0\n")
        for bound, vec, label in self._soc:
            out.write(f"soc[{label}]: ||{vec!r}|| <= {bound!r}\n")
        for vec, u, v, label in self._rsoc:
            out.write(f"rsoc[{label}]: ||{vec!r}||^2 <= ({u!r})*({v!r})\n")
        for xe, ye, ze, label in self._exp:
            out.write(f"exp[{label}]: ({ye!r}) * exp(({ze!r})/({ye!r})) <= {xe!r}\n")
        return out.getvalue()


def add_quadratic_le_linear(problem: ConicProblem, terms, const: float,
                            bound: ScalarExpr, label: str = "quad_le_lin"):
    """Emit sum_i |terms_i|^2 + const <= bound as a rotated second-order cone.

    ``terms`` may mix ComplexExpr (both parts enter) and ScalarExpr entries;
    ``const`` must be nonnegative (it joins the quadratic side as a fixed
    component).
    """
    if const < 0:
        raise ValueError("constant quadratic offset must be nonnegative")
    vec: list[ScalarExpr] = []
    for term in terms:
        if isinstance(term, ComplexExpr):
            vec.extend([term.re, term.im])
        else:
            vec.append(term)
    if const > 0:
        vec.append(ScalarExpr.constant(math.sqrt(const)))
    return problem.add_rotated(vec, bound, ScalarExpr.constant(1.0), label)


def add_exp_rate_link(problem: ConicProblem, rho: ScalarExpr, alpha: ScalarExpr,
                      label: str = "exp_link"):
    """Emit 1 + rho >= 2^alpha as the exponential cone (1 + rho, 1, alpha*ln 2)."""
    return problem.add_exp(rho + 1.0, ScalarExpr.constant(1.0), alpha * LN2, label)


# -- backends ---------------------------------------------------------------

_CLARABEL_STATUS = None


def _clarabel_status_map():
    global _CLARABEL_STATUS
    if _CLARABEL_STATUS is None:
        import clarabel

        _CLARABEL_STATUS = {
            clarabel.SolverStatus.Solved: SolveStatus.OPTIMAL,
            clarabel.SolverStatus.AlmostSolved: SolveStatus.MAX_ITERATIONS,
            clarabel.SolverStatus.MaxIterations: SolveStatus.MAX_ITERATIONS,
            clarabel.SolverStatus.MaxTime: SolveStatus.MAX_ITERATIONS,
            clarabel.SolverStatus.PrimalInfeasible: SolveStatus.INFEASIBLE,
            clarabel.SolverStatus.AlmostPrimalInfeasible: SolveStatus.INFEASIBLE,
        }
    return _CLARABEL_STATUS


def _rsoc_to_soc(vec, u, v):
    """||vec||^2 <= u*v  <=>  ||[2*vec; u - v]|| <= u + v."""
    lowered = [w * 2.0 for w in vec]
    lowered.append(u - v)
    return u + v, lowered


def _assemble_clarabel(problem: ConicProblem):
    import clarabel

    rows_i: list[int] = []
    cols: list[int] = []
    vals: list[float] = []
    b: list[float] = []
    cones = []
    row = 0

    def push(expr: ScalarExpr, sign: float):
        nonlocal row
        for i, c in expr.coef.items():
            rows_i.append(row)
            cols.append(i)
            vals.append(sign * c)
        b.append(sign * -expr.const if sign < 0 else expr.const)
        row += 1

    # zero cone: expr == 0  ->  A x = -const
    for expr, _ in problem._eq:
        for i, c in expr.coef.items():
            rows_i.append(row)
            cols.append(i)
            vals.append(c)
        b.append(-expr.const)
        row += 1
    if problem._eq:
        cones.append(clarabel.ZeroConeT(len(problem._eq)))

    # nonnegative cone: expr <= 0  ->  s = -expr >= 0
    for expr, _ in problem._le:
        for i, c in expr.coef.items():
            rows_i.append(row)
            cols.append(i)
            vals.append(c)
        b.append(-expr.const)
        row += 1
    if problem._le:
        cones.append(clarabel.NonnegativeConeT(len(problem._le)))

    def push_soc(bound: ScalarExpr, vec: list[ScalarExpr]):
        nonlocal row
        for expr in [bound] + vec:
            for i, c in expr.coef.items():
                rows_i.append(row)
                cols.append(i)
                vals.append(-c)
            b.append(expr.const)
            row += 1
        cones.append(clarabel.SecondOrderConeT(len(vec) + 1))

    for bound, vec, _ in problem._soc:
        push_soc(bound, vec)
    for vec, u, v, _ in problem._rsoc:
        push_soc(*_rsoc_to_soc(vec, u, v))

    # exponential cone in clarabel order (a, b, c): b * e^{a/b} <= c
    for xe, ye, ze, _ in problem._exp:
        for expr in (ze, ye, xe):
            for i, c in expr.coef.items():
                rows_i.append(row)
                cols.append(i)
                vals.append(-c)
            b.append(expr.const)
            row += 1
        cones.append(clarabel.ExponentialConeT())

    n = problem.n
    a_mat = sparse.csc_matrix((vals, (rows_i, cols)), shape=(row, n))
    p_mat = sparse.csc_matrix((n, n))
    q = problem.objective.dense(n)
    return p_mat, q, a_mat, np.asarray(b), cones


def _solve_clarabel(problem: ConicProblem, tolerance: float, max_iter: int) -> SolveOutcome:
    import clarabel

    p_mat, q, a_mat, b, cones = _assemble_clarabel(problem)
    settings = clarabel.DefaultSettings()
    settings.verbose = False
    settings.max_iter = max_iter
    settings.tol_gap_abs = tolerance
    settings.tol_gap_rel = tolerance
    # clarabel measures feasibility on equilibrated data; tighten it so the
    # raw-coordinate residual honours the requested tolerance
    settings.tol_feas = max(tolerance * 1e-2, 1e-12)
    solver = clarabel.DefaultSolver(p_mat, q, a_mat, b, cones, settings)
    sol = solver.solve()
    status = _clarabel_status_map().get(sol.status, SolveStatus.NUMERICAL_FAILURE)
    x = np.asarray(sol.x) if status in (SolveStatus.OPTIMAL, SolveStatus.MAX_ITERATIONS) else None
    objective = problem.objective.value(x) if x is not None else None
    residual = problem.residual(x) if x is not None else None
    if status is SolveStatus.OPTIMAL and residual is not None and residual > tolerance:
        status = SolveStatus.MAX_ITERATIONS
    elif (sol.status == _almost_solved() and residual is not None and residual <= tolerance):
        # reduced-accuracy certificate plus our own feasibility check
        status = SolveStatus.OPTIMAL
    return SolveOutcome(status, x, objective, residual, detail=str(sol.status))


def _almost_solved():
    import clarabel

    return clarabel.SolverStatus.AlmostSolved


def _solve_cvxpy(problem: ConicProblem, tolerance: float, solver: str) -> SolveOutcome:
    import cvxpy as cp

    n = problem.n
    x = cp.Variable(n)
    cons = []

    def aff(expr: ScalarExpr):
        if not expr.coef:
            return expr.const
        return expr.dense(n) @ x + expr.const

    for expr, _ in problem._eq:
        cons.append(aff(expr) == 0)
    for expr, _ in problem._le:
        cons.append(aff(expr) <= 0)
    for bound, vec, _ in problem._soc:
        cons.append(cp.SOC(aff(bound), cp.hstack([aff(v) for v in vec])))
    for vec, u, v, _ in problem._rsoc:
        bound, lowered = _rsoc_to_soc(vec, u, v)
        cons.append(cp.SOC(aff(bound), cp.hstack([aff(w) for w in lowered])))
    for xe, ye, ze, _ in problem._exp:
        cons.append(cp.constraints.ExpCone(aff(ze), aff(ye), aff(xe)))

    objective = cp.Minimize(problem.objective.dense(n) @ x + problem.objective.const)
    prob = cp.Problem(objective, cons)
    if solver == "scs":
        prob.solve(solver=cp.SCS, eps=min(tolerance, 1e-9), max_iters=200_000)
    else:
        prob.solve(solver=cp.CLARABEL, tol_gap_abs=tolerance, tol_gap_rel=tolerance,
                   tol_feas=tolerance)
    mapping = {
        cp.OPTIMAL: SolveStatus.OPTIMAL,
        cp.OPTIMAL_INACCURATE: SolveStatus.MAX_ITERATIONS,
        cp.INFEASIBLE: SolveStatus.INFEASIBLE,
        cp.INFEASIBLE_INACCURATE: SolveStatus.INFEASIBLE,
    }
    status = mapping.get(prob.status, SolveStatus.NUMERICAL_FAILURE)
    xv = np.asarray(x.value) if x.value is not None and status.value != "infeasible" else None
    obj = problem.objective.value(xv) if xv is not None else None
    res = problem.residual(xv) if xv is not None else None
    if status is SolveStatus.OPTIMAL and res is not None and res > tolerance:
        status = SolveStatus.MAX_ITERATIONS
    return SolveOutcome(status, xv, obj, res, detail=str(prob.status))


def solve(problem: ConicProblem, tolerance: float = 1e-8, solver: str = "clarabel",
          max_iter: int = 500) -> SolveOutcome:
    """Solve the problem; deterministic for identical inputs.

    ``solver`` is "clarabel" (direct bindings, default), "scs" or
    "cvxpy-clarabel" (both through the cvxpy translation path, used for
    cross-checking the encoding and the solutions).
    """
    if solver == "clarabel":
        return _solve_clarabel(problem, tolerance, max_iter)
    if solver in ("scs", "cvxpy-clarabel"):
        return _solve_cvxpy(problem, tolerance, solver)
    raise ValueError(f"unknown solver {solver!r}")


def solve_robust(problem: ConicProblem, tolerance: float = 1e-8,
                 solver: str = "clarabel") -> SolveOutcome:
    """``solve`` with a deterministic fallback chain for degenerate instances.

    Interior-point solves occasionally fail numerically on near-degenerate
    iterates (for example when an alternating loop has essentially converged).
    On a numerical failure this retries the same solver at a loosened target
    and finally the second solver; infeasibility reports are returned as-is.
    """
    out = solve(problem, tolerance, solver)
    if out.status is not SolveStatus.NUMERICAL_FAILURE:
        return out
    for factor in (1e2, 1e3):
        out = solve(problem, tolerance * factor, solver)
        if out.status is not SolveStatus.NUMERICAL_FAILURE:
            return out
    for fallback in ("cvxpy-clarabel", "scs"):
        if fallback == solver:
            continue
        try:
            out = solve(problem, tolerance, fallback)
        except ImportError:
            continue
        if out.status is not SolveStatus.NUMERICAL_FAILURE:
            return out
    return out
