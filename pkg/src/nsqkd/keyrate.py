"""From guessing probability to mutual-information bound and key rate."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from nsqkd.exceptions import InfeasibleLP, NoSignChange
from nsqkd.lp_builder import build_full, build_reduced
from nsqkd.protocol import ProtocolConfig, werner_correlations
from nsqkd.simplex import certify, solve

LOCAL_BOUNDARY = 1 / math.sqrt(2)


def binary_entropy(q):
    """H(q) in bits, with H(0) = H(1) = 0."""
    q = float(q)
    if not 0.0 <= q <= 1.0:
        raise ValueError(f"binary entropy needs q in [0, 1], got {q}")
    if q == 0.0 or q == 1.0:
        return 0.0
    return -q * math.log2(q) - (1 - q) * math.log2(1 - q)


def _entropy(probs):
    probs = np.asarray(probs, dtype=float).ravel()
    probs = probs[probs > 0]
    return float(-np.sum(probs * np.log2(probs)))


def mutual_info_ab(t):
    """Mutual information of Alice's and Bob's key bits (settings x = y = 0)."""
    joint = np.asarray(t.probs[0, 0], dtype=float)
    return max(_entropy(joint.sum(axis=1)) + _entropy(joint.sum(axis=0)) - _entropy(joint), 0.0)


def ibe_bound(P_E, tol=1e-9):
    """Upper bound 2 P_E - 1 on Eve's information about Bob's bit.

    Only defined for P_E in [1/2, 1]; Eve can always reach 1/2 by guessing.
    """
    if not (0.5 - tol <= P_E <= 1.0 + tol):
        raise ValueError(f"guessing probability must lie in [1/2, 1], got {P_E}")
    return min(max(2.0 * P_E - 1.0, 0.0), 1.0)


@dataclass(frozen=True)
class BobEveJoint:
    """Joint distribution R[i, j] of Bob's bit i and Eve's outcome j."""

    R: np.ndarray

    def __post_init__(self):
        R = np.array(self.R, dtype=float)
        if R.ndim != 2 or R.shape[0] != 2 or R.shape[1] < 1:
            raise ValueError(f"expected a 2 x m array, got shape {R.shape}")
        if R.min() < 0 or abs(R.sum() - 1.0) > 1e-9:
            raise ValueError("R must be a probability distribution")
        R.flags.writeable = False
        object.__setattr__(self, "R", R)

    @property
    def bob_marginal(self):
        return self.R.sum(axis=1)

    @property
    def eve_marginal(self):
        return self.R.sum(axis=0)

    @property
    def m(self):
        return self.R.shape[1]


@dataclass
class GuessingBoundCheck:
    i_be: float
    p_e: float
    bound: float
    holds: bool

    @property
    def slack(self):
        return self.bound - self.i_be


def verify_guessing_bound(joint, tol=1e-12):
    """Compute I(B:E) and the guessing probability of ``joint``; test I <= 2 P_E - 1."""
    if not isinstance(joint, BobEveJoint):
        joint = BobEveJoint(joint)
    bob = joint.bob_marginal
    if np.max(np.abs(bob - 0.5)) > 1e-9:
        raise ValueError(f"Bob marginal must be uniform, got {bob.tolist()}")
    R = joint.R
    i_be = max(_entropy(bob) + _entropy(joint.eve_marginal) - _entropy(R), 0.0)
    # sum_j P(j) max_i P(i|j) = sum_j max_i R(i,j)
    p_e = float(R.max(axis=0).sum())
    bound = 2 * p_e - 1
    return GuessingBoundCheck(i_be, p_e, bound, i_be <= bound + tol)


@dataclass(frozen=True)
class KeyRateReport:
    p: float
    guessing_prob: float
    I_AB: float
    I_BE_bound: float
    K_raw: float
    K: float
    form: str = "reduced"
    certificate_gap: float | None = None
    q: float = 1.0
    q_prime: float = 1.0

    def check(self, tol=1e-9):
        """Raise ``ValueError`` if the record breaks a key-rate invariant."""
        problems = []
        if not 0.5 - tol <= self.guessing_prob <= 1 + tol:
            problems.append("P_E outside [1/2, 1]")
        if abs(self.I_BE_bound - (2 * self.guessing_prob - 1)) > tol:
            problems.append("I_BE_bound != 2 P_E - 1")
        if not -tol <= self.I_AB <= 1 + tol:
            problems.append("I_AB outside [0, 1]")
        if not -tol <= self.I_BE_bound <= 1 + tol:
            problems.append("I_BE_bound outside [0, 1]")
        if self.K != max(0.0, self.K_raw):
            problems.append("K != max(0, K_raw)")
        if problems:
            raise ValueError(f"invalid report at p={self.p}: " + ", ".join(problems))
        return self

    def row(self):
        return (self.p, self.guessing_prob, self.I_AB, self.I_BE_bound, self.K_raw, self.K)


def report_for(p, t, sol, form="reduced", certificate_gap=None, config=None):
    """Assemble the key-rate record for an optimal guessing-probability LP."""
    if not sol.optimal:
        raise InfeasibleLP(f"LP at p={p} ended with status {sol.status}")
    config = config or ProtocolConfig()
    P_E = min(float(sol.value), 1.0)
    i_ab = mutual_info_ab(t)
    i_be = ibe_bound(P_E)
    k_raw = i_ab - i_be
    return KeyRateReport(
        p=p,
        guessing_prob=P_E,
        I_AB=i_ab,
        I_BE_bound=i_be,
        K_raw=k_raw,
        K=max(0.0, k_raw),
        form=form,
        certificate_gap=certificate_gap,
        q=config.q,
        q_prime=config.q_prime,
    )


def solve_table(t, form="reduced"):
    """Build, solve and certify the LP for ``t``; returns ``(instance, solution, certificate)``."""
    inst = build_reduced(t) if form == "reduced" else build_full(t)
    sol = solve(inst)
    if not sol.optimal:
        raise InfeasibleLP(f"{form} LP ended with status {sol.status}")
    cert = certify(inst, sol)
    if not cert.ok:
        raise InfeasibleLP(f"{form} LP certificate rejected: {'; '.join(cert.diagnostics)}")
    return inst, sol, cert


def evaluate_point(p, form="reduced", model=werner_correlations, config=None):
    """Key-rate record at one value of p for the given correlation model."""
    t = model(p)
    _, sol, cert = solve_table(t, form)
    return report_for(p, t, sol, form=form, certificate_gap=cert.gap, config=config)


@dataclass
class ThresholdResult:
    p_star: float
    lo: float
    hi: float
    iterations: int

    @property
    def width(self):
        return self.hi - self.lo


def find_threshold(model=werner_correlations, tol=1e-6, bracket=(LOCAL_BOUNDARY, 1.0), form="reduced"):
    """Bisect K_raw(p) for the onset of a positive key rate.

    Returns the midpoint of a bracket of width at most ``tol`` across which
    K_raw changes sign.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    lo, hi = map(float, bracket)
    if not 0.0 <= lo < hi <= 1.0:
        raise ValueError(f"bad bracket {bracket}")

    def k_raw(p):
        return evaluate_point(p, form=form, model=model).K_raw

    f_lo, f_hi = k_raw(lo), k_raw(hi)
    if f_lo * f_hi > 0 or (f_lo == 0 and f_hi == 0):
        raise NoSignChange(f"K_raw has no sign change on [{lo}, {hi}] ({f_lo:.4g}, {f_hi:.4g})")
    it = 0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        f_mid = k_raw(mid)
        if (f_mid < 0) == (f_lo < 0):
            lo, f_lo = mid, f_mid
        else:
            hi = mid
        it += 1
    return ThresholdResult(0.5 * (lo + hi), lo, hi, it)
