"""Oracles and generators shared by the test suite.

Everything here is seeded; pass the same seed to replay a failure.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from importlib import resources

import numpy as np

from nsqkd.exceptions import InfeasibleLP
from nsqkd.keyrate import BobEveJoint, evaluate_point, find_threshold
from nsqkd.protocol import COS2_PI_8, CorrelationTable, werner_correlations
from nsqkd.simplex import solve


def feasible_vertices(inst, k, seed=0):
    """The optimal vertex of ``inst`` followed by ``k - 1`` optima of random objectives."""
    sol = solve(inst)
    if not sol.optimal:
        raise InfeasibleLP(f"instance is {sol.status}")
    rng = np.random.default_rng(seed)
    verts = [sol.primal]
    for _ in range(k - 1):
        c = rng.standard_normal(inst.num_vars)
        s = solve(dataclasses.replace(inst, objective=c, constant=0.0))
        verts.append(s.primal)
    return verts


def sample_feasible(inst, n, seed=0, n_vertices=8):
    """``n`` random feasible points: convex combinations of the centre and LP vertices."""
    verts = feasible_vertices(inst, n_vertices, seed)
    anchors = np.array([inst.center] + verts) if inst.center is not None else np.array(verts)
    rng = np.random.default_rng(seed + 1)
    weights = rng.dirichlet(np.full(len(anchors), 0.5), size=n)
    return weights @ anchors


def random_bob_eve_joint(m, seed=0):
    """Random Bob-Eve joint with exactly uniform Bob marginal over ``m`` Eve outcomes."""
    if m < 1:
        raise ValueError("m must be at least 1")
    rng = np.random.default_rng(seed)
    g = rng.exponential(size=(2, m))
    # Sparse columns make near-deterministic guesses, which stress the bound.
    g *= rng.random((2, m)) < 0.8
    g[:, g.sum(axis=0) == 0] = 1.0
    g[g.sum(axis=1) == 0] = 1.0
    R = 0.5 * g / g.sum(axis=1, keepdims=True)
    return BobEveJoint(R)


def perfect_copy_joint():
    return BobEveJoint(np.array([[0.5, 0.0], [0.0, 0.5]]))


def product_joint(eve):
    eve = np.asarray(eve, dtype=float)
    return BobEveJoint(np.outer([0.5, 0.5], eve / eve.sum()))


def unnormalized_table(p=0.9, setting=(0, 0), deficit=0.01):
    t = np.array(werner_correlations(p).probs)
    t[setting][0, 0] -= deficit
    return CorrelationTable(t)


def signaling_table(p=0.9, delta=0.02):
    """Werner table with Alice's x=0 marginal shifted by ``delta`` between y=0 and y=1."""
    t = np.array(werner_correlations(p).probs)
    t[0, 0, 0, 0] += delta
    t[0, 0, 1, 0] -= delta
    return CorrelationTable(t)


@dataclass(frozen=True)
class GoldenFixture:
    name: str
    quantity: str
    p: float | None
    expected: float
    tolerance: float
    anchor: str


def load_fixtures():
    text = resources.files("nsqkd").joinpath("data/golden_fixtures.json").read_text(encoding="utf-8")
    return [GoldenFixture(**d) for d in json.loads(text)]


def evaluate_fixture(fx, form="reduced"):
    """Recompute the quantity a fixture pins down."""
    q = fx.quantity
    if q == "alpha_coefficient":
        return COS2_PI_8
    if q == "beta_coefficient":
        return 1 - COS2_PI_8
    if q == "threshold":
        return find_threshold(tol=1e-6, form=form).p_star
    if q == "P00_setting00":
        return float(werner_correlations(fx.p).probs[0, 0, 0, 0])
    rep = evaluate_point(fx.p, form=form)
    if q == "P_E":
        return rep.guessing_prob
    if q == "abs_K_raw":
        return abs(rep.K_raw)
    return getattr(rep, q)


def check_fixture(fx, form="reduced"):
    got = evaluate_fixture(fx, form)
    ok = abs(got - fx.expected) <= fx.tolerance
    msg = f"{fx.name}: got {got:.10g}, expected {fx.expected} +/- {fx.tolerance:g} [{fx.anchor}]"
    return ok, msg
