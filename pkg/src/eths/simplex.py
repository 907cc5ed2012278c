"""Dense bounded-variable primal simplex, sufficient for the dispatch LPs.

Solves  min c'x  s.t.  A x = b,  l <= x <= u  (l finite, u may be +inf).
Two phases with explicit artificials; the basis inverse is kept densely and
refreshed periodically. Returns primal and dual solutions plus reduced costs
so callers can certify optimality via complementary slackness.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InfeasibleError, SolverTimeoutError

_RC_TOL = 1e-9
_PIVOT_TOL = 1e-10
_REFRESH_EVERY = 150


@dataclass
class LpSolution:
    x: np.ndarray
    objective: float
    duals: np.ndarray            # one multiplier per equality row
    reduced_costs: np.ndarray
    iterations: int

    def complementary_slackness_residual(self, lower: np.ndarray, upper: np.ndarray) -> float:
        """Max violation of the optimality pairing between x and reduced costs.

        A positive reduced cost requires x at its lower bound, a negative one
        at its upper bound; interior variables need zero reduced cost.
        """
        res = 0.0
        for xj, lj, uj, rc in zip(self.x, lower, upper, self.reduced_costs):
            if rc > 0:
                res = max(res, rc * (xj - lj))
            elif rc < 0:
                if np.isinf(uj):
                    res = max(res, -rc)
                else:
                    res = max(res, -rc * (uj - xj))
        return float(res)


def _pick_entering(rc: np.ndarray, at_lower: np.ndarray, at_upper: np.ndarray,
                   basic_mask: np.ndarray, fixed: np.ndarray, bland: bool) -> int:
    blocked = basic_mask | fixed
    viol = np.where(blocked, 0.0,
                    np.where(at_lower & (rc < -_RC_TOL), -rc, 0.0)
                    + np.where(at_upper & (rc > _RC_TOL), rc, 0.0))
    if not np.any(viol > 0):
        return -1
    if bland:
        return int(np.nonzero(viol > 0)[0][0])
    return int(np.argmax(viol))


def solve_lp(c: np.ndarray, A: np.ndarray, b: np.ndarray,
             lower: np.ndarray, upper: np.ndarray,
             max_iter: int = 20000) -> LpSolution:
    """Two-phase simplex; raises InfeasibleError / SolverTimeoutError."""
    c = np.asarray(c, dtype=float)
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    m, n = A.shape

    # Start every structural variable at its lower bound and cover the
    # residual with one artificial per row.
    x = lower.copy()
    resid = b - A @ x
    sign = np.where(resid >= 0, 1.0, -1.0)
    A_ext = np.hstack([A, np.diag(sign)])
    n_ext = n + m
    lower_ext = np.concatenate([lower, np.zeros(m)])
    upper_ext = np.concatenate([upper, np.full(m, np.inf)])
    x_ext = np.concatenate([x, np.abs(resid)])
    basis = np.arange(n, n_ext)

    phase1_cost = np.concatenate([np.zeros(n), np.ones(m)])
    it1, x_ext, basis = _simplex_core(phase1_cost, A_ext, b, lower_ext, upper_ext,
                                      x_ext, basis, max_iter)
    infeas = float(phase1_cost @ x_ext)
    if infeas > 1e-7:
        raise InfeasibleError(f"LP infeasible: phase-1 residual {infeas:.3e}")

    # Pin artificials to zero for phase 2.
    upper_ext = upper_ext.copy()
    upper_ext[n:] = 0.0
    x_ext[n:] = np.clip(x_ext[n:], 0.0, 0.0)
    cost_ext = np.concatenate([c, np.zeros(m)])
    it2, x_ext, basis = _simplex_core(cost_ext, A_ext, b, lower_ext, upper_ext,
                                      x_ext, basis, max_iter)

    Binv = np.linalg.inv(A_ext[:, basis])
    y = cost_ext[basis] @ Binv
    rc = c - y @ A
    xs = x_ext[:n]
    return LpSolution(x=xs, objective=float(c @ xs), duals=y,
                      reduced_costs=rc, iterations=it1 + it2)


def _simplex_core(c, A, b, lower, upper, x, basis, max_iter):
    m, n = A.shape
    basic_mask = np.zeros(n, dtype=bool)
    basic_mask[basis] = True
    Binv = np.linalg.inv(A[:, basis])
    dist_up = np.where(np.isinf(upper), np.inf, np.abs(x - upper))
    at_lower = ~basic_mask & (np.abs(x - lower) <= dist_up)
    at_upper = ~basic_mask & ~at_lower
    fixed = (upper - lower) <= 0
    degenerate_run = 0

    for it in range(max_iter):
        if it % _REFRESH_EVERY == 0 and it > 0:
            Binv = np.linalg.inv(A[:, basis])
        y = c[basis] @ Binv
        rc = c - y @ A
        e = _pick_entering(rc, at_lower, at_upper, basic_mask, fixed,
                           bland=degenerate_run > 60)
        if e < 0:
            return it, x, basis
        # Moving off a lower bound increases x_e, off an upper bound decreases.
        direction = 1.0 if at_lower[e] else -1.0
        d = Binv @ A[:, e]
        xb = x[basis]
        # Max step before a basic variable hits one of its bounds.
        step = np.inf if np.isinf(upper[e]) else upper[e] - lower[e]
        leave = -1
        leave_to_upper = False
        delta = direction * d
        for i in range(m):
            if delta[i] > _PIVOT_TOL:
                room = (xb[i] - lower[basis[i]]) / delta[i]
                if room < step - 1e-12:
                    step, leave, leave_to_upper = room, i, False
            elif delta[i] < -_PIVOT_TOL:
                ub = upper[basis[i]]
                if np.isinf(ub):
                    continue
                room = (ub - xb[i]) / -delta[i]
                if room < step - 1e-12:
                    step, leave, leave_to_upper = room, i, True
        if np.isinf(step):
            raise InfeasibleError("LP unbounded below")
        degenerate_run = degenerate_run + 1 if step <= 1e-12 else 0

        x[basis] = xb - step * delta
        x[e] += direction * step
        if leave < 0:
            # Bound-to-bound flip of the entering variable.
            at_lower[e] = not at_lower[e]
            at_upper[e] = not at_upper[e]
            continue
        out = basis[leave]
        basic_mask[out] = False
        basic_mask[e] = True
        at_upper[out] = leave_to_upper
        at_lower[out] = not leave_to_upper
        x[out] = upper[out] if leave_to_upper else lower[out]
        at_lower[e] = at_upper[e] = False
        basis[leave] = e
        # Product-form update of the basis inverse.
        col = Binv @ A[:, e]
        piv = col[leave]
        if abs(piv) < _PIVOT_TOL:
            Binv = np.linalg.inv(A[:, basis])
        else:
            Binv[leave, :] /= piv
            rows = np.arange(m) != leave
            Binv[rows, :] -= np.outer(col[rows], Binv[leave, :])
    raise SolverTimeoutError(f"simplex did not converge in {max_iter} iterations")
