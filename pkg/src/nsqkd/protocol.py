"""AMP protocol correlations on a Werner state.

Alice measures in one of three bases (x = 0, 1, 2) and Bob in one of two
(y = 0, 1); all measurements have binary outcomes.  A correlation table holds
P(a, b | x, y) for the six setting pairs as an array indexed ``[x, y, a, b]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from nsqkd.exceptions import TableStructureError, TableValidationError

ALICE_ANGLES = (0.0, math.pi / 4, -math.pi / 4)
BOB_ANGLES = (0.0, math.pi / 2)
SETTINGS = tuple((x, y) for x in range(3) for y in range(2))

# cos^2(pi/8), the probability that aligned-by-pi/4 outcomes agree on |phi+>.
COS2_PI_8 = (2.0 + math.sqrt(2.0)) / 4.0

TABLE_TOL = 1e-12


@dataclass(frozen=True)
class MeasurementSetting:
    party: str
    index: int
    angle: float

    def __post_init__(self):
        if self.party == "Alice":
            angles = ALICE_ANGLES
        elif self.party == "Bob":
            angles = BOB_ANGLES
        else:
            raise ValueError(f"unknown party {self.party!r}")
        if not 0 <= self.index < len(angles):
            raise ValueError(f"{self.party} has no setting {self.index}")
        if not math.isclose(self.angle, angles[self.index], abs_tol=1e-15):
            raise ValueError(f"{self.party} setting {self.index} has angle {angles[self.index]}")

    @classmethod
    def alice(cls, x):
        if x not in range(len(ALICE_ANGLES)):
            raise ValueError(f"Alice has no setting {x}")
        return cls("Alice", x, ALICE_ANGLES[x])

    @classmethod
    def bob(cls, y):
        if y not in range(len(BOB_ANGLES)):
            raise ValueError(f"Bob has no setting {y}")
        return cls("Bob", y, BOB_ANGLES[y])


@dataclass(frozen=True)
class ProtocolConfig:
    """Basis-sifting weights.

    ``q`` is Alice's probability of choosing x = 0 and ``q_prime`` Bob's of
    choosing y = 0.  They are carried into reports but never enter a
    computation: in the asymptotic regime they do not affect the rate.
    """

    q: float = 1.0
    q_prime: float = 1.0

    def __post_init__(self):
        for name in ("q", "q_prime"):
            v = getattr(self, name)
            if not 0.0 < v <= 1.0:
                raise ValueError(f"{name} must lie in (0, 1], got {v}")

    def setting_probabilities(self):
        alice = (self.q, (1 - self.q) / 2, (1 - self.q) / 2)
        bob = (self.q_prime, 1 - self.q_prime)
        return alice, bob


@dataclass(frozen=True, eq=False)
class CorrelationTable:
    probs: np.ndarray
    source: str = "ingested"
    p: float | None = None

    def __post_init__(self):
        arr = np.array(self.probs, dtype=float)
        if arr.shape != (3, 2, 2, 2):
            raise TableStructureError(f"expected table of shape (3, 2, 2, 2), got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise TableStructureError("table contains non-finite entries")
        arr.flags.writeable = False
        object.__setattr__(self, "probs", arr)

    def setting(self, x, y):
        return self.probs[x, y]

    def __getitem__(self, key):
        return self.probs[key]

    def is_symmetric(self, tol=TABLE_TOL):
        """True when every setting has P(0,0)=P(1,1) and P(0,1)=P(1,0)."""
        t = self.probs
        return bool(
            np.all(np.abs(t[:, :, 0, 0] - t[:, :, 1, 1]) <= tol)
            and np.all(np.abs(t[:, :, 0, 1] - t[:, :, 1, 0]) <= tol)
        )

    def mix_with_noise(self, p):
        """Return ``p * self + (1 - p) * uniform``."""
        _check_p(p)
        return CorrelationTable(p * self.probs + (1 - p) * 0.25, source=self.source, p=None)

    def to_json_dict(self):
        return {
            "settings": [
                {"x": x, "y": y, "probs": self.probs[x, y].tolist()} for x, y in SETTINGS
            ]
        }

    @classmethod
    def from_json_dict(cls, doc, source="ingested"):
        """Parse ``{"settings": [{x, y, probs: [[P00, P01], [P10, P11]]}, ...]}``."""
        if not isinstance(doc, dict) or "settings" not in doc:
            raise TableStructureError("top level must be an object with key 'settings'")
        records = doc["settings"]
        if not isinstance(records, list):
            raise TableStructureError("'settings' must be an array")
        arr = np.full((3, 2, 2, 2), np.nan)
        seen = set()
        for k, rec in enumerate(records):
            where = f"settings[{k}]"
            if not isinstance(rec, dict):
                raise TableStructureError(f"{where}: expected an object")
            missing = {"x", "y", "probs"} - rec.keys()
            if missing:
                raise TableStructureError(f"{where}: missing field(s) {sorted(missing)}")
            x, y = rec["x"], rec["y"]
            if not (isinstance(x, int) and isinstance(y, int)) or (x, y) not in SETTINGS:
                raise TableStructureError(f"{where}: invalid setting pair x={x!r}, y={y!r}")
            if (x, y) in seen:
                raise TableStructureError(f"{where}: duplicate setting pair ({x},{y})")
            seen.add((x, y))
            probs = rec["probs"]
            ok = (
                isinstance(probs, list)
                and len(probs) == 2
                and all(isinstance(row, list) and len(row) == 2 for row in probs)
                and all(
                    isinstance(v, (int, float)) and not isinstance(v, bool)
                    for row in probs
                    for v in row
                )
            )
            if not ok:
                raise TableStructureError(f"{where}.probs: expected a 2x2 array of numbers")
            arr[x, y] = probs
        absent = [s for s in SETTINGS if s not in seen]
        if absent:
            raise TableStructureError(f"missing setting pair(s) {absent}")
        return cls(arr, source=source)


def _check_p(p):
    if not (isinstance(p, (int, float, np.floating)) and 0.0 <= p <= 1.0):
        raise ValueError(f"Werner parameter p must lie in [0, 1], got {p!r}")


def born_joint(angle_a, angle_b, p):
    """Outcome distribution for equatorial measurements on the Werner state.

    Returns the 2x2 array ``P[a, b] = (1 + (-1)**(a^b) * p * cos(angle_a - angle_b)) / 4``.
    """
    c = p * math.cos(angle_a - angle_b)
    same = (1.0 + c) / 4.0
    diff = (1.0 - c) / 4.0
    return np.array([[same, diff], [diff, same]])


def werner_correlations(p):
    """Alice-Bob correlation table of the AMP protocol on a Werner state of weight ``p``.

    Uses closed forms: the agreeing probability for the pi/4-separated
    settings is ``alpha = cos^2(pi/8) p/2 + (1-p)/4``, the disagreeing one
    ``beta = sin^2(pi/8) p/2 + (1-p)/4``.
    """
    _check_p(p)
    p = float(p)
    noise = (1.0 - p) / 4.0
    diag00 = p / 2.0 + noise
    alpha = COS2_PI_8 * p / 2.0 + noise
    beta = (1.0 - COS2_PI_8) * p / 2.0 + noise

    def block(same, diff):
        return [[same, diff], [diff, same]]

    t = np.empty((3, 2, 2, 2))
    t[0, 0] = block(diag00, noise)
    t[0, 1] = block(0.25, 0.25)
    t[1, 0] = block(alpha, beta)
    t[1, 1] = block(alpha, beta)
    t[2, 0] = block(alpha, beta)
    t[2, 1] = block(beta, alpha)
    return CorrelationTable(t, source="werner-model", p=p)


@dataclass
class CheckResult:
    name: str
    passed: bool
    residual: float
    detail: str = ""


@dataclass
class ValidationReport:
    checks: list = field(default_factory=list)

    @property
    def passed(self):
        return all(c.passed for c in self.checks)

    @property
    def max_residual(self):
        return max((c.residual for c in self.checks), default=0.0)

    def failures(self):
        return [c for c in self.checks if not c.passed]

    def __getitem__(self, name):
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def summary(self):
        if self.passed:
            return f"table valid (max residual {self.max_residual:.3g})"
        return "; ".join(f"{c.name} violated: {c.detail}" for c in self.failures())


def validate_table(t, tol=TABLE_TOL):
    """Check nonnegativity, normalization and marginal no-signaling of ``t``.

    Structural problems raise :class:`TableStructureError`; numeric
    violations are reported, not raised.
    """
    if not isinstance(t, CorrelationTable):
        t = CorrelationTable(t)
    P = t.probs
    report = ValidationReport()

    neg = -P.min()
    worst = np.unravel_index(np.argmin(P), P.shape)
    report.checks.append(
        CheckResult(
            "nonnegativity",
            neg <= tol,
            max(neg, 0.0),
            f"P(a={worst[2]},b={worst[3]}|x={worst[0]},y={worst[1]}) = {P[worst]:.6g}",
        )
    )

    norm = np.abs(P.sum(axis=(2, 3)) - 1.0)
    x, y = np.unravel_index(np.argmax(norm), norm.shape)
    report.checks.append(
        CheckResult(
            "normalization",
            norm.max() <= tol,
            float(norm.max()),
            f"setting ({x},{y}) sums to {P[x, y].sum():.12g}",
        )
    )

    alice = P.sum(axis=3)  # [x, y, a]
    a_res = np.abs(alice[:, 0, :] - alice[:, 1, :])
    x, a = np.unravel_index(np.argmax(a_res), a_res.shape)
    report.checks.append(
        CheckResult(
            "Alice-marginal no-signaling",
            a_res.max() <= tol,
            float(a_res.max()),
            f"P(a={a}|x={x}) differs by {a_res.max():.6g} between y=0 and y=1",
        )
    )

    bob = P.sum(axis=2)  # [x, y, b]
    b_res = np.abs(bob - bob[0:1])
    x, y, b = np.unravel_index(np.argmax(b_res), b_res.shape)
    report.checks.append(
        CheckResult(
            "Bob-marginal no-signaling",
            b_res.max() <= tol,
            float(b_res.max()),
            f"P(b={b}|y={y}) differs by {b_res.max():.6g} between x=0 and x={x}",
        )
    )
    return report


def require_valid(t, tol=TABLE_TOL):
    report = validate_table(t, tol=tol)
    if not report.passed:
        raise TableValidationError(report.summary(), report)
    return report
