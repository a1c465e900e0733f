"""Self-contained dense convex QP solver with verifiable KKT certificates.

Solves   minimize    sum_v q_v z_v^2 + c_v z_v        (q >= 0 elementwise)
         subject to  a_r . z <= b_r                   (dense rows)
                     lb <= z <= ub                    (entries may be +-inf)

by a Mehrotra predictor-corrector primal-dual interior-point method.  The
problems this package produces are small (tens of variables) and dense, so
everything is plain numpy with dense factorizations.  Infeasibility is
detected by an elastic phase-1 relaxation (minimize total constraint
violation; a positive optimum certifies an empty feasible set).

``dump_problem`` writes a plain-text form for offline inspection:

    qp n_vars n_rows
    quad: q_0 ... q_{n-1}
    lin:  c_0 ... c_{n-1}
    row:  a_0 ... a_{n-1} <= b          (one line per constraint)
    lb:   ...                            (-inf allowed)
    ub:   ...                            (+inf allowed)
"""

from dataclasses import dataclass, field

import numpy as np

_REG = 1e-12          # static diagonal regularization of the normal matrix
_STEP_FRAC = 0.995    # fraction-to-boundary step damping


@dataclass(frozen=True)
class QpProblem:
    """Diagonal-quadratic objective, linear inequality rows, variable bounds."""

    quad_diag: np.ndarray    # (n,), >= 0
    lin_coef: np.ndarray     # (n,)
    a: np.ndarray            # (m, n) row coefficients of a.z <= b
    b: np.ndarray            # (m,)
    lb: np.ndarray           # (n,), -inf allowed
    ub: np.ndarray           # (n,), +inf allowed

    def __post_init__(self):
        for name in ("quad_diag", "lin_coef", "a", "b", "lb", "ub"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        n = self.quad_diag.shape[0]
        if self.lin_coef.shape != (n,) or self.lb.shape != (n,) or self.ub.shape != (n,):
            raise ValueError("coefficient/bound shapes inconsistent with variable count")
        if self.a.ndim != 2 or self.a.shape[1] != n or self.b.shape != (self.a.shape[0],):
            raise ValueError("constraint matrix shape inconsistent")
        if np.any(self.quad_diag < 0):
            raise ValueError("quad_diag must be elementwise non-negative")
        if self.a.shape[0] and np.any(np.all(self.a == 0.0, axis=1)):
            raise ValueError("constraint rows must have at least one nonzero coefficient")
        if np.any(self.lb > self.ub):
            raise ValueError("lower bound exceeds upper bound")

    @property
    def n(self) -> int:
        return self.quad_diag.shape[0]

    @property
    def n_rows(self) -> int:
        return self.a.shape[0]

    def objective(self, z: np.ndarray) -> float:
        return float(np.dot(self.quad_diag, z * z) + np.dot(self.lin_coef, z))


@dataclass
class QpSolution:
    z: np.ndarray
    duals: np.ndarray            # multipliers of the constraint rows
    bound_duals_lo: np.ndarray   # multipliers of active lower bounds
    bound_duals_hi: np.ndarray   # multipliers of active upper bounds
    objective: float
    kkt: dict                    # stationarity / primal / dual / complementarity
    status: str                  # 'optimal' | 'infeasible' | 'max_iterations'
    iterations: int
    infeasibility: float = 0.0   # phase-1 violation measure when not optimal


def _stack_inequalities(problem: QpProblem):
    """Fold finite bounds into the row system G z <= h; remember the split."""
    n = problem.n
    blocks, rhs = [problem.a], [problem.b]
    lo_idx = np.where(np.isfinite(problem.lb))[0]
    hi_idx = np.where(np.isfinite(problem.ub))[0]
    if lo_idx.size:
        rows = np.zeros((lo_idx.size, n))
        rows[np.arange(lo_idx.size), lo_idx] = -1.0
        blocks.append(rows)
        rhs.append(-problem.lb[lo_idx])
    if hi_idx.size:
        rows = np.zeros((hi_idx.size, n))
        rows[np.arange(hi_idx.size), hi_idx] = 1.0
        blocks.append(rows)
        rhs.append(problem.ub[hi_idx])
    g = np.vstack(blocks) if blocks else np.zeros((0, n))
    h = np.concatenate(rhs) if rhs else np.zeros(0)
    return g, h, lo_idx, hi_idx


def _initial_point(problem: QpProblem, g, h):
    n = problem.n
    z = np.zeros(n)
    finite_lo = np.isfinite(problem.lb)
    finite_hi = np.isfinite(problem.ub)
    both = finite_lo & finite_hi
    z[both] = 0.5 * (problem.lb[both] + problem.ub[both])
    only_lo = finite_lo & ~finite_hi
    z[only_lo] = problem.lb[only_lo] + 1.0
    only_hi = finite_hi & ~finite_lo
    z[only_hi] = problem.ub[only_hi] - 1.0
    s = np.maximum(h - g @ z, 1.0)
    lam = np.ones(len(h))
    return z, s, lam


def _max_step(v: np.ndarray, dv: np.ndarray) -> float:
    """Largest alpha in (0, 1] with v + alpha*dv >= 0."""
    neg = dv < 0
    if not np.any(neg):
        return 1.0
    return min(1.0, float(np.min(-v[neg] / dv[neg])))


def _ipm(problem: QpProblem, g, h, tol: float, max_iter: int):
    """Core predictor-corrector loop on minimize q z^2 + c z s.t. G z <= h."""
    n, m = problem.n, len(h)
    q2 = 2.0 * problem.quad_diag
    c = problem.lin_coef
    if m == 0:
        # Unconstrained diagonal QP: solvable only if every flat direction is costless.
        if np.any((q2 == 0) & (c != 0)):
            raise ValueError("unbounded problem: flat objective direction with no constraint")
        z = np.where(q2 > 0, -c / np.where(q2 > 0, q2, 1.0), 0.0)
        return z, np.zeros(0), True, 0

    z, s, lam = _initial_point(problem, g, h)
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        return _ipm_loop(problem, g, h, tol, max_iter, q2, c, z, s, lam)


def _ipm_loop(problem, g, h, tol, max_iter, q2, c, z, s, lam):
    n, m = problem.n, len(h)
    for it in range(1, max_iter + 1):
        rd = q2 * z + c + g.T @ lam
        viol = g @ z - h
        rp = viol + s
        comp = s * lam
        # converge on the residuals a later independent replay will see:
        # true primal violation and complementarity against b - Az, not s
        if (np.max(np.abs(rd)) <= tol
                and np.max(viol, initial=0.0) <= tol
                and np.max(np.abs(lam * viol), initial=0.0) <= tol):
            return z, lam, True, it - 1
        mu = float(np.mean(comp))
        w = lam / s
        mmat = np.diag(q2 + _REG) + (g.T * w) @ g
        reg = _REG
        while True:
            try:
                chol = np.linalg.cholesky(mmat)
                break
            except np.linalg.LinAlgError:
                reg *= 100.0
                if reg > 1e-4:
                    return z, lam, False, it
                mmat = mmat + reg * np.eye(n)

        def solve_step(rc):
            rhs = -rd - g.T @ ((rc + lam * rp) / s)
            dz = np.linalg.solve(chol.T, np.linalg.solve(chol, rhs))
            ds = -rp - g @ dz
            dlam = (rc + lam * rp) / s + w * (g @ dz)
            return dz, ds, dlam

        # predictor
        dz_a, ds_a, dlam_a = solve_step(-comp)
        ap = _max_step(s, ds_a)
        ad = _max_step(lam, dlam_a)
        mu_aff = float(np.dot(s + ap * ds_a, lam + ad * dlam_a)) / m
        sigma = min(1.0, max(0.0, (mu_aff / mu) ** 3)) if mu > 0 else 0.0
        # corrector
        rc = -comp + sigma * mu - ds_a * dlam_a
        dz, ds, dlam = solve_step(rc)
        ap = _STEP_FRAC * _max_step(s, ds)
        ad = _STEP_FRAC * _max_step(lam, dlam)
        z = z + ap * dz
        s = s + ap * ds
        lam = lam + ad * dlam
        if not (np.all(np.isfinite(z)) and np.all(np.isfinite(lam))):
            return z, lam, False, it
    return z, lam, False, max_iter


def _phase1_violation(problem: QpProblem, g, h, tol: float, max_iter: int):
    """Minimal total elastic violation of G z <= h; > tol certifies infeasibility."""
    n, m = problem.n, len(h)
    quad = np.zeros(n + m)
    lin = np.concatenate([np.zeros(n), np.ones(m)])
    a = np.hstack([g, -np.eye(m)])
    lb = np.concatenate([np.full(n, -np.inf), np.zeros(m)])
    ub = np.full(n + m, np.inf)
    elastic = QpProblem(quad_diag=quad, lin_coef=lin, a=a, b=h, lb=lb, ub=ub)
    ge, he, _, _ = _stack_inequalities(elastic)
    x, _, ok, _ = _ipm(elastic, ge, he, tol, max_iter)
    if not ok:
        return None
    return float(np.sum(np.maximum(x[n:], 0.0)))


def _split_duals(problem: QpProblem, lam_all, lo_idx, hi_idx):
    m = problem.n_rows
    duals = lam_all[:m]
    lo = np.zeros(problem.n)
    hi = np.zeros(problem.n)
    lo[lo_idx] = lam_all[m:m + lo_idx.size]
    hi[hi_idx] = lam_all[m + lo_idx.size:]
    return duals, lo, hi


def kkt_residuals(problem: QpProblem, z, duals, bound_lo, bound_hi) -> dict:
    """Recompute all KKT residuals from scratch (independent of the solve path)."""
    grad = 2.0 * problem.quad_diag * z + problem.lin_coef
    stat = grad - bound_lo + bound_hi
    if problem.n_rows:
        stat = stat + problem.a.T @ duals
    primal = 0.0
    comp = 0.0
    if problem.n_rows:
        resid = problem.a @ z - problem.b
        primal = max(primal, float(np.max(resid, initial=0.0)))
        comp = max(comp, float(np.max(np.abs(duals * resid), initial=0.0)))
    finite_lo = np.isfinite(problem.lb)
    finite_hi = np.isfinite(problem.ub)
    if np.any(finite_lo):
        gap = problem.lb[finite_lo] - z[finite_lo]
        primal = max(primal, float(np.max(gap)))
        comp = max(comp, float(np.max(np.abs(bound_lo[finite_lo] * gap))))
    if np.any(finite_hi):
        gap = z[finite_hi] - problem.ub[finite_hi]
        primal = max(primal, float(np.max(gap)))
        comp = max(comp, float(np.max(np.abs(bound_hi[finite_hi] * gap))))
    dual = max(0.0,
               float(-np.min(duals, initial=0.0)),
               float(-np.min(bound_lo, initial=0.0)),
               float(-np.min(bound_hi, initial=0.0)))
    return {
        "stationarity": float(np.max(np.abs(stat), initial=0.0)),
        "primal": max(0.0, primal),
        "dual": dual,
        "complementarity": comp,
    }


def solve_qp(problem: QpProblem, tol: float = 1e-8, max_iter: int = 100) -> QpSolution:
    """Solve the QP; on 'optimal' all KKT residuals are <= tol.

    Infeasible problems are reported via the phase-1 elastic relaxation so
    callers can distinguish an empty feasible set from numerical failure.
    """
    g, h, lo_idx, hi_idx = _stack_inequalities(problem)
    z, lam_all, ok, iters = _ipm(problem, g, h, tol, max_iter)
    if ok:
        duals, blo, bhi = _split_duals(problem, lam_all, lo_idx, hi_idx)
        kkt = kkt_residuals(problem, z, duals, blo, bhi)
        return QpSolution(z=z, duals=duals, bound_duals_lo=blo, bound_duals_hi=bhi,
                          objective=problem.objective(z), kkt=kkt,
                          status="optimal", iterations=iters)
    violation = _phase1_violation(problem, g, h, tol, max_iter)
    duals, blo, bhi = _split_duals(problem, np.maximum(lam_all, 0.0), lo_idx, hi_idx)
    kkt = kkt_residuals(problem, z, duals, blo, bhi)
    if violation is not None and violation > max(tol, 1e-10 * max(1.0, float(np.max(np.abs(h), initial=0.0)))):
        status = "infeasible"
    else:
        status = "max_iterations"
    return QpSolution(z=z, duals=duals, bound_duals_lo=blo, bound_duals_hi=bhi,
                      objective=problem.objective(z), kkt=kkt,
                      status=status, iterations=iters,
                      infeasibility=violation if violation is not None else float("nan"))


def check_kkt(problem: QpProblem, solution: QpSolution, tol: float = 1e-8):
    """Independent KKT replay; returns (ok, residual breakdown)."""
    res = kkt_residuals(problem, solution.z, solution.duals,
                        solution.bound_duals_lo, solution.bound_duals_hi)
    ok = all(res[key] <= tol for key in ("stationarity", "primal", "dual", "complementarity"))
    return ok, res


def dump_problem(problem: QpProblem) -> str:
    """Plain-text form of a problem (format documented in the module docstring)."""

    def fmt(arr):
        return " ".join(format(v, ".17g") for v in arr)

    lines = [f"qp {problem.n} {problem.n_rows}",
             f"quad: {fmt(problem.quad_diag)}",
             f"lin:  {fmt(problem.lin_coef)}"]
    for r in range(problem.n_rows):
        lines.append(f"row:  {fmt(problem.a[r])} <= {format(problem.b[r], '.17g')}")
    lines.append(f"lb:   {fmt(problem.lb)}")
    lines.append(f"ub:   {fmt(problem.ub)}")
    return "\n".join(lines) + "\n"
