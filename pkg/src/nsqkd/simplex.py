"""Two-phase bounded-variable primal simplex with Bland's rule.

Bounds are handled as variable states (basic, at lower, at upper) rather
than as extra rows, so the basis stays the size of the equality system.
Phase 1 adds one artificial per row and drives their sum to zero; in
phase 2 the artificials are fixed at zero, which also absorbs redundant
equality rows without a separate rank-reduction pass.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from nsqkd.exceptions import InfeasibleLP, IterationLimitExceeded

logger = logging.getLogger(__name__)

FEAS_TOL = 1e-9
OPT_TOL = 1e-8
PIVOT_TOL = 1e-10
MAX_ITER = 100_000

BASIC, AT_LOWER, AT_UPPER = "basic", "at-lower", "at-upper"


@dataclass
class LpSolution:
    status: str
    value: float = float("nan")
    primal: np.ndarray | None = None
    dual_eq: np.ndarray | None = None
    reduced_costs: np.ndarray | None = None
    basis: list = field(default_factory=list)
    iterations: int = 0

    @property
    def optimal(self):
        return self.status == "optimal"

    def to_json_dict(self):
        def arr(a):
            return None if a is None else [float(v) for v in a]

        return {
            "status": self.status,
            "value": float(self.value),
            "primal": arr(self.primal),
            "dual_eq": arr(self.dual_eq),
            "reduced_costs": arr(self.reduced_costs),
            "basis": list(self.basis),
            "iterations": int(self.iterations),
        }


class _Simplex:
    """Mutable solver state for one instance; maximizes ``cost @ v``."""

    def __init__(self, A, b, lower, upper, max_iter):
        self.A = A
        self.b = b
        self.lower = lower
        self.upper = upper
        self.m, self.n = A.shape
        self.max_iter = max_iter
        self.iterations = 0

    def values(self):
        v = np.where(self.state == AT_UPPER, self.upper, self.lower).astype(float)
        v[self.basis] = self.xB
        return v

    def _refresh(self):
        v = np.where(self.state == AT_UPPER, self.upper, self.lower).astype(float)
        v[self.basis] = 0.0
        B = self.A[:, self.basis]
        self.xB = np.linalg.solve(B, self.b - self.A @ v)

    def run(self, cost):
        A, lower, upper = self.A, self.lower, self.upper
        while True:
            if self.iterations >= self.max_iter:
                raise IterationLimitExceeded(f"simplex exceeded {self.max_iter} iterations")
            B = A[:, self.basis]
            y = np.linalg.solve(B.T, cost[self.basis])
            d = cost - A.T @ y

            entering = None
            for j in range(self.n):
                if self.state[j] == AT_LOWER and d[j] > OPT_TOL and upper[j] > lower[j]:
                    entering, direction = j, 1.0
                    break
                if self.state[j] == AT_UPPER and d[j] < -OPT_TOL and upper[j] > lower[j]:
                    entering, direction = j, -1.0
                    break
            if entering is None:
                return y, d

            w = np.linalg.solve(B, A[:, entering])
            step = upper[entering] - lower[entering]
            leave_pos, leave_to = None, None
            for i, bi in enumerate(self.basis):
                rate = direction * w[i]
                if rate > PIVOT_TOL:
                    room = (self.xB[i] - lower[bi]) / rate
                    target = AT_LOWER
                elif rate < -PIVOT_TOL:
                    room = (upper[bi] - self.xB[i]) / -rate
                    target = AT_UPPER
                else:
                    continue
                room = max(room, 0.0)
                # Bland: ties go to the smallest variable index.
                if room < step or (
                    room == step
                    and (leave_pos is None and bi < entering or leave_pos is not None and bi < self.basis[leave_pos])
                ):
                    step, leave_pos, leave_to = room, i, target
            if not np.isfinite(step):
                return None, None

            self.iterations += 1
            if leave_pos is None:
                self.state[entering] = AT_UPPER if direction > 0 else AT_LOWER
                self._refresh()
                continue
            leaving = self.basis[leave_pos]
            self.state[leaving] = leave_to
            self.state[entering] = BASIC
            self.basis[leave_pos] = entering
            self._refresh()


def solve(inst, max_iter=MAX_ITER):
    """Maximize the instance objective; returns an :class:`LpSolution`.

    Deterministic for a given instance.  Raises
    :class:`IterationLimitExceeded` if the iteration cap is hit.
    """
    A = np.asarray(inst.A_eq, dtype=float)
    b = np.asarray(inst.b_eq, dtype=float)
    m, n = A.shape
    lower = np.asarray(inst.lower, dtype=float)
    upper = np.asarray(inst.upper, dtype=float)
    if len(b) != m or len(lower) != n or len(upper) != n:
        raise ValueError("inconsistent instance dimensions")

    if m == 0:
        c = np.asarray(inst.objective, dtype=float)
        v = np.where(c > 0, upper, lower)
        state = [AT_UPPER if cj > 0 and upper[j] > lower[j] else AT_LOWER for j, cj in enumerate(c)]
        return LpSolution("optimal", float(c @ v + inst.constant), v, np.zeros(0), c.copy(), state, 0)

    resid = b - A @ lower
    signs = np.where(resid >= 0, 1.0, -1.0)
    A_aug = np.hstack([A, np.diag(signs)])
    lo_aug = np.concatenate([lower, np.zeros(m)])
    up_aug = np.concatenate([upper, np.full(m, np.inf)])

    sx = _Simplex(A_aug, b, lo_aug, up_aug, max_iter)
    sx.state = np.array([AT_LOWER] * (n + m), dtype=object)
    sx.state[n:] = BASIC
    sx.basis = list(range(n, n + m))
    sx.xB = np.abs(resid)

    phase1 = np.concatenate([np.zeros(n), -np.ones(m)])
    sx.run(phase1)
    infeas = float(np.sum(sx.values()[n:]))
    if infeas > FEAS_TOL * max(1.0, np.abs(b).max()):
        logger.debug("phase 1 ended with artificial mass %.3g", infeas)
        return LpSolution("infeasible", iterations=sx.iterations)

    # Phase 2: pin artificials at zero; basic ones leave on the first pivot touching their row.
    sx.upper = up_aug.copy()
    sx.upper[n:] = 0.0
    sx._refresh()
    cost = np.concatenate([np.asarray(inst.objective, dtype=float), np.zeros(m)])
    y, d = sx.run(cost)
    if y is None:
        return LpSolution("unbounded", iterations=sx.iterations)

    v = sx.values()[:n]
    state = [str(s) for s in sx.state[:n]]
    return LpSolution(
        status="optimal",
        value=float(inst.objective @ v + inst.constant),
        primal=v,
        dual_eq=y,
        reduced_costs=d[:n],
        basis=state,
        iterations=sx.iterations,
    )


@dataclass
class Certificate:
    """Weak-duality bound built from equality multipliers.

    With finite boxes any multiplier vector ``y`` is dual feasible once the
    bound multipliers are taken as the positive and negative parts of the
    reduced costs ``c - A^T y``; the resulting ``bound`` is then a valid
    upper bound on the maximum.
    """

    dual_eq: np.ndarray
    upper_multipliers: np.ndarray
    lower_multipliers: np.ndarray
    bound: float
    primal_value: float
    gap: float
    primal_eq_residual: float
    primal_bound_residual: float
    complementarity: float
    ok: bool
    diagnostics: list = field(default_factory=list)

    def to_json_dict(self):
        return {
            "dual_eq": [float(v) for v in self.dual_eq],
            "upper_multipliers": [float(v) for v in self.upper_multipliers],
            "lower_multipliers": [float(v) for v in self.lower_multipliers],
            "bound": self.bound,
            "primal_value": self.primal_value,
            "gap": self.gap,
            "primal_eq_residual": self.primal_eq_residual,
            "primal_bound_residual": self.primal_bound_residual,
            "ok": self.ok,
            "diagnostics": list(self.diagnostics),
        }


def certify(inst, sol, gap_tol=1e-8, feas_tol=FEAS_TOL):
    """Recompute the optimality certificate from the instance data and ``sol`` alone."""
    if sol.status != "optimal":
        raise ValueError(f"cannot certify a solution with status {sol.status!r}")
    A = np.asarray(inst.A_eq, dtype=float)
    b = np.asarray(inst.b_eq, dtype=float)
    c = np.asarray(inst.objective, dtype=float)
    lo = np.asarray(inst.lower, dtype=float)
    up = np.asarray(inst.upper, dtype=float)
    y = np.asarray(sol.dual_eq, dtype=float)
    v = np.asarray(sol.primal, dtype=float)

    d = c - A.T @ y
    s_up = np.maximum(d, 0.0)
    s_lo = np.maximum(-d, 0.0)
    bound = float(b @ y + up @ s_up - lo @ s_lo + inst.constant)
    value = float(c @ v + inst.constant)
    gap = bound - value

    eq_res = float(np.max(np.abs(A @ v - b), initial=0.0))
    bnd_res = float(max(np.max(lo - v, initial=0.0), np.max(v - up, initial=0.0), 0.0))
    # Complementary slackness: bound multipliers only where the bound is active.
    comp = float(np.max(np.concatenate([s_up * (up - v), s_lo * (v - lo)]), initial=0.0))

    diagnostics = []
    if eq_res > feas_tol:
        diagnostics.append(f"primal equality residual {eq_res:.3g} exceeds {feas_tol:g}")
    if bnd_res > feas_tol:
        diagnostics.append(f"primal bound violation {bnd_res:.3g} exceeds {feas_tol:g}")
    if abs(gap) > gap_tol:
        diagnostics.append(f"duality gap {gap:.3g} exceeds {gap_tol:g}")
    return Certificate(
        dual_eq=y,
        upper_multipliers=s_up,
        lower_multipliers=s_lo,
        bound=bound,
        primal_value=value,
        gap=gap,
        primal_eq_residual=eq_res,
        primal_bound_residual=bnd_res,
        complementarity=comp,
        ok=not diagnostics,
        diagnostics=diagnostics,
    )


@dataclass
class ConcavityReport:
    ps: np.ndarray
    values: np.ndarray
    concave: bool
    monotone: bool
    max_concavity_violation: float
    max_increase: float
    max_chord_deviation: float

    @property
    def passed(self):
        return self.concave and self.monotone


def parametric_concavity_check(ps, values=None, builder=None, tol=1e-8):
    """Check concavity and monotone non-increase of the optimal value over a p-grid.

    ``values`` may be given directly; otherwise each p is built with
    ``builder`` (default: reduced Werner instance) and solved.
    ``max_chord_deviation`` measures how far interior values sit from the
    straight line between the two endpoints, which is zero when the value
    function is affine on the grid.
    """
    ps = np.asarray(ps, dtype=float)
    if len(ps) < 3:
        raise ValueError("need at least three grid points")
    order = np.argsort(ps)
    ps = ps[order]
    if values is None:
        from nsqkd.lp_builder import build_reduced
        from nsqkd.protocol import werner_correlations

        builder = builder or (lambda p: build_reduced(werner_correlations(p)))
        vals = []
        for p in ps:
            sol = solve(builder(p))
            if not sol.optimal:
                raise InfeasibleLP(f"LP at p={p} ended with status {sol.status}")
            vals.append(sol.value)
        values = np.array(vals)
    else:
        values = np.asarray(values, dtype=float)[order]

    worst = 0.0
    for k in range(1, len(ps) - 1):
        p1, p2, p3 = ps[k - 1 : k + 2]
        lam = (p3 - p2) / (p3 - p1)
        chord = lam * values[k - 1] + (1 - lam) * values[k + 1]
        worst = max(worst, chord - values[k])
    increase = float(np.max(np.diff(values), initial=0.0))
    line = values[0] + (values[-1] - values[0]) * (ps - ps[0]) / (ps[-1] - ps[0])
    return ConcavityReport(
        ps=ps,
        values=values,
        concave=worst <= tol,
        monotone=increase <= tol,
        max_concavity_violation=float(worst),
        max_increase=max(increase, 0.0),
        max_chord_deviation=float(np.max(np.abs(values - line))),
    )
