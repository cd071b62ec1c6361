"""
Bounded damped Gauss-Newton (Levenberg-Marquardt) least squares.

Steps solve ``(J^T J + lam * diag(J^T J)) dx = -J^T r``; the damping ``lam``
shrinks tenfold after an accepted step and grows tenfold after a rejected
one. Bounds are enforced by projecting each trial point onto the box.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

FD_REL_STEP = 1e-6
FD_ABS_FLOOR = 1e-8


class FitError(RuntimeError):
    """Solver failure that leaves no usable estimate."""

    def __init__(self, message, params=None):
        self.params = None if params is None else np.array(params, dtype=float)
        if params is not None:
            message = f"{message} at params={np.array2string(self.params, precision=8)}"
        super().__init__(message)


class UnderdeterminedFit(FitError):
    pass


@dataclass
class FitProblem:
    residual: Callable[[np.ndarray], np.ndarray]
    x0: Sequence[float]
    lower: Sequence[float] | None = None
    upper: Sequence[float] | None = None
    names: Sequence[str] | None = None
    jacobian: Callable[[np.ndarray], np.ndarray] | None = None
    gtol: float = 1e-10
    xtol: float = 1e-12
    ftol: float = 1e-14
    max_iter: int = 200
    damping: float = 1e-3

    def __post_init__(self):
        self.x0 = np.asarray(self.x0, dtype=float)
        n = self.x0.size
        self.lower = np.full(n, -np.inf) if self.lower is None else np.asarray(self.lower, dtype=float)
        self.upper = np.full(n, np.inf) if self.upper is None else np.asarray(self.upper, dtype=float)
        if self.names is None:
            self.names = [f"p{k}" for k in range(n)]
        if len(self.names) != n or self.lower.shape != (n,) or self.upper.shape != (n,):
            raise ValueError("names/bounds must match the parameter count")
        if np.any(self.lower > self.x0) or np.any(self.x0 > self.upper):
            raise ValueError("initial point violates bounds")


@dataclass
class FitResult:
    names: list
    x: np.ndarray
    stderr: np.ndarray
    cost: float
    iterations: int
    converged: bool
    reason: str
    covariance: np.ndarray | None = field(default=None, repr=False)
    extra: dict = field(default_factory=dict)

    def __getitem__(self, name):
        return float(self.x[list(self.names).index(name)])

    def error(self, name):
        return float(self.stderr[list(self.names).index(name)])

    @property
    def params(self) -> dict:
        return {n: float(v) for n, v in zip(self.names, self.x)}

    def to_dict(self) -> dict:
        out = {
            "params": {n: {"value": float(v), "stderr": float(e)} for n, v, e in zip(self.names, self.x, self.stderr)},
            "cost": float(self.cost),
            "iterations": int(self.iterations),
            "converged": bool(self.converged),
            "reason": self.reason,
        }
        if self.extra:
            out.update(self.extra)
        return out


def numerical_jacobian(fun, x, lower=None, upper=None, rel_step=FD_REL_STEP, abs_floor=FD_ABS_FLOOR):
    """Central-difference Jacobian, falling back to one-sided steps at bounds."""
    x = np.asarray(x, dtype=float)
    f0 = None
    cols = []
    for j in range(x.size):
        h = rel_step * max(abs(x[j]), abs_floor / rel_step)
        xp, xm = x.copy(), x.copy()
        xp[j] += h
        xm[j] -= h
        up = upper is None or xp[j] <= upper[j]
        dn = lower is None or xm[j] >= lower[j]
        if up and dn:
            cols.append((fun(xp) - fun(xm)) / (2 * h))
        else:
            if f0 is None:
                f0 = fun(x)
            cols.append((fun(xp) - f0) / h if up else (f0 - fun(xm)) / h)
    return np.column_stack(cols)


def _solve(A, g):
    try:
        return np.linalg.solve(A, -g)
    except np.linalg.LinAlgError:
        return np.linalg.lstsq(A, -g, rcond=None)[0]


def least_squares(problem: FitProblem) -> FitResult:
    """Minimise ``0.5 * ||r(x)||^2`` subject to box bounds."""
    lo, hi = problem.lower, problem.upper
    x = np.clip(problem.x0, lo, hi)

    def resid(p):
        r = np.asarray(problem.residual(p), dtype=float)
        if not np.all(np.isfinite(r)):
            raise FitError("non-finite residual", p)
        return r

    def jac(p):
        if problem.jacobian is not None:
            return np.asarray(problem.jacobian(p), dtype=float)
        return numerical_jacobian(resid, p, lo, hi)

    r = resid(x)
    if r.size < x.size:
        raise UnderdeterminedFit(f"{r.size} residuals for {x.size} parameters")
    cost = 0.5 * float(r @ r)
    lam = problem.damping
    converged, reason, it = False, "max_iterations", 0
    J = None
    while it < problem.max_iter:
        J = jac(x)
        g = J.T @ r
        if np.max(np.abs(g)) <= problem.gtol:
            converged, reason = True, "gradient"
            break
        it += 1
        A = J.T @ J
        D = np.diag(np.maximum(np.diag(A), 1e-300))
        while True:
            step = _solve(A + lam * D, g)
            x_new = np.clip(x + step, lo, hi)
            r_new = resid(x_new)
            cost_new = 0.5 * float(r_new @ r_new)
            if cost_new < cost or (cost_new == cost == 0.0):
                break
            lam = 1e-3 if lam == 0 else lam * 10
            if lam > 1e20:
                x_new, r_new, cost_new = x, r, cost
                break
        if lam > 1e20:
            converged, reason = True, "no_further_reduction"
            break
        dx = np.linalg.norm(x_new - x)
        dcost = cost - cost_new
        x, r, cost = x_new, r_new, cost_new
        lam = lam / 10
        if dx <= problem.xtol * (np.linalg.norm(x) + problem.xtol):
            converged, reason = True, "step"
            break
        if dcost <= problem.ftol * max(cost + dcost, 1e-300):
            converged, reason = True, "cost"
            break
    if J is None or it > 0:
        J = jac(x)
    m, n = r.size, x.size
    A = J.T @ J
    dof = m - n
    if dof > 0:
        s2 = 2 * cost / dof
    else:
        s2 = 0.0 if cost == 0 else np.inf
    cov = s2 * np.linalg.pinv(A)
    stderr = np.sqrt(np.clip(np.diag(cov), 0, None))
    return FitResult(list(problem.names), x, stderr, cost, it, converged, reason, cov)
