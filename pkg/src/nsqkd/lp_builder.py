"""Eavesdropper LP over joint distributions P(a, b, e | x, y).

Variables are grouped in six blocks, one per setting pair, in the order
x-hat (0,0), y-hat (0,1), z-hat (1,0), u-hat (1,1), v-hat (2,0), w-hat (2,1).
Within a block the outcome ``abe`` is read as a 3-bit binary number, so
P(1,0,1|0,0) is ``x5``.  The full form keeps all eight outcomes per block
(48 variables); the reduced form keeps the even (e = 0) outcomes only and
recovers the odd ones from the Alice-Bob marginals (24 variables).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from nsqkd.exceptions import ReductionInapplicable
from nsqkd.protocol import SETTINGS, CorrelationTable, require_valid

BLOCKS = ("x", "y", "z", "u", "v", "w")
BLOCK_OF = dict(zip(SETTINGS, BLOCKS))
SETTING_OF = dict(zip(BLOCKS, SETTINGS))
EVEN = (0, 2, 4, 6)

# Pairs of blocks tied by Alice-Eve no-signaling (same x, y = 0 vs 1).
ALICE_PAIRS = (("x", "y"), ("z", "u"), ("v", "w"))
# Chains tied by Bob-Eve no-signaling (same y, x = 0 -> 1 -> 2).
BOB_PAIRS = (("x", "z"), ("z", "v"), ("y", "u"), ("u", "w"))


def outcome_index(a, b, e):
    return 4 * a + 2 * b + e


def outcome_bits(k):
    return (k >> 2) & 1, (k >> 1) & 1, k & 1


def full_index(x, y, a, b, e):
    """Position of P(a,b,e|x,y) in the 48-variable ordering."""
    return 8 * SETTINGS.index((x, y)) + outcome_index(a, b, e)


def reduced_index(block, k):
    if k % 2:
        raise ValueError("reduced form keeps even outcome indices only")
    return 4 * BLOCKS.index(block) + k // 2


FULL_NAMES = tuple(f"{blk}{k}" for blk in BLOCKS for k in range(8))
REDUCED_NAMES = tuple(f"{blk}{k}" for blk in BLOCKS for k in EVEN)


def _frozen(a):
    a = np.array(a, dtype=float)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class LpInstance:
    """Maximize ``objective @ v + constant`` subject to ``A_eq v = b_eq``, ``lower <= v <= upper``.

    ``center`` is a known feasible point (Eve's outcome independent of
    everything else) kept for samplers and tests; it is not used by the
    solver.
    """

    objective: np.ndarray
    constant: float
    A_eq: np.ndarray
    b_eq: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    form: str = "custom"
    var_names: tuple = ()
    row_labels: tuple = ()
    p: float | None = None
    center: np.ndarray | None = None
    table: CorrelationTable | None = field(default=None, repr=False)

    def __post_init__(self):
        n = len(self.objective)
        A = np.array(self.A_eq, dtype=float).reshape(-1, n)
        object.__setattr__(self, "objective", _frozen(self.objective))
        object.__setattr__(self, "A_eq", _frozen(A))
        object.__setattr__(self, "b_eq", _frozen(self.b_eq))
        object.__setattr__(self, "lower", _frozen(self.lower))
        object.__setattr__(self, "upper", _frozen(self.upper))
        object.__setattr__(self, "constant", float(self.constant))
        if self.center is not None:
            object.__setattr__(self, "center", _frozen(self.center))
        if not self.var_names:
            object.__setattr__(self, "var_names", tuple(f"v{j}" for j in range(n)))
        if not self.row_labels:
            object.__setattr__(self, "row_labels", tuple(f"r{i}" for i in range(A.shape[0])))
        if len(self.b_eq) != A.shape[0] or len(self.row_labels) != A.shape[0]:
            raise ValueError("equality rows, rhs and labels disagree in length")
        if len(self.lower) != n or len(self.upper) != n or len(self.var_names) != n:
            raise ValueError("bounds or names disagree with the number of variables")
        if not (np.all(np.isfinite(self.lower)) and np.all(np.isfinite(self.upper))):
            raise ValueError("all variable bounds must be finite")
        if np.any(self.lower > self.upper):
            raise ValueError("lower bound exceeds upper bound")

    @property
    def num_vars(self):
        return len(self.objective)

    @property
    def num_equalities(self):
        return self.A_eq.shape[0]

    def evaluate(self, v):
        return float(self.objective @ np.asarray(v, dtype=float) + self.constant)

    def residuals(self, v):
        """Largest equality violation and largest bound violation at ``v``."""
        v = np.asarray(v, dtype=float)
        eq = float(np.max(np.abs(self.A_eq @ v - self.b_eq), initial=0.0))
        bnd = float(max(np.max(self.lower - v, initial=0.0), np.max(v - self.upper, initial=0.0), 0.0))
        return eq, bnd

    def is_feasible(self, v, tol=1e-9):
        eq, bnd = self.residuals(v)
        return eq <= tol and bnd <= tol


def _marginal_rows(t):
    rows, rhs, labels = [], [], []
    for x, y in SETTINGS:
        for a in (0, 1):
            for b in (0, 1):
                r = np.zeros(48)
                r[full_index(x, y, a, b, 0)] = 1.0
                r[full_index(x, y, a, b, 1)] = 1.0
                rows.append(r)
                rhs.append(t.probs[x, y, a, b])
                labels.append(f"marginal P({a},{b}|{x},{y})")
    return rows, rhs, labels


def _alice_eve_rows(es=(0, 1)):
    rows, labels = [], []
    for x in range(3):
        for a in (0, 1):
            for e in es:
                r = np.zeros(48)
                for b in (0, 1):
                    r[full_index(x, 0, a, b, e)] += 1.0
                    r[full_index(x, 1, a, b, e)] -= 1.0
                rows.append(r)
                labels.append(f"alice-eve ns a={a} e={e} x={x}")
    return rows, labels


def _bob_eve_rows(es=(0, 1)):
    rows, labels = [], []
    for y in range(2):
        for b in (0, 1):
            for e in es:
                for x1, x2 in ((0, 1), (1, 2)):
                    r = np.zeros(48)
                    for a in (0, 1):
                        r[full_index(x1, y, a, b, e)] += 1.0
                        r[full_index(x2, y, a, b, e)] -= 1.0
                    rows.append(r)
                    labels.append(f"bob-eve ns b={b} e={e} y={y} x={x1}|{x2}")
    return rows, labels


def _normalization_rows():
    rows, labels = [], []
    for x, y in SETTINGS:
        r = np.zeros(48)
        r[8 * SETTINGS.index((x, y)) : 8 * SETTINGS.index((x, y)) + 8] = 1.0
        rows.append(r)
        labels.append(f"normalization ({x},{y})")
    return rows, [1.0] * len(rows), labels


def _eve_marginal_rows():
    rows, labels = [], []
    for x, y in SETTINGS[1:]:
        for e in (0, 1):
            r = np.zeros(48)
            for a in (0, 1):
                for b in (0, 1):
                    r[full_index(x, y, a, b, e)] += 1.0
                    r[full_index(0, 0, a, b, e)] -= 1.0
            rows.append(r)
            labels.append(f"eve marginal e={e} ({x},{y})=(0,0)")
    return rows, [0.0] * len(rows), labels


def _full_guessing_objective():
    c = np.zeros(48)
    # R(0,0) + R(1,1) = x0 + x4 + x3 + x7
    for a in (0, 1):
        c[full_index(0, 0, a, 0, 0)] = 1.0
        c[full_index(0, 0, a, 1, 1)] = 1.0
    return c


def _as_table(t):
    if not isinstance(t, CorrelationTable):
        t = CorrelationTable(t)
    require_valid(t)
    return t


def build_full(t):
    """48-variable eavesdropper LP with marginal and no-signaling equalities.

    Normalization and the Eve-marginal condition are implied by the retained
    rows and are left out; :func:`verify_redundancies` certifies this.
    """
    t = _as_table(t)
    rows, rhs, labels = _marginal_rows(t)
    for extra in (_alice_eve_rows(), _bob_eve_rows()):
        rows += extra[0]
        rhs += [0.0] * len(extra[0])
        labels += extra[1]
    center = np.array([t.probs[x, y, a, b] / 2 for x, y in SETTINGS for a in (0, 1) for b in (0, 1) for _ in (0, 1)])
    return LpInstance(
        objective=_full_guessing_objective(),
        constant=0.0,
        A_eq=np.array(rows),
        b_eq=np.array(rhs),
        lower=np.zeros(48),
        upper=np.ones(48),
        form="full",
        var_names=FULL_NAMES,
        row_labels=tuple(labels),
        p=t.p,
        center=center,
        table=t,
    )


def build_reduced(t):
    """24-variable LP in the even outcomes after eliminating the odd ones.

    Each odd variable equals its Alice-Bob marginal minus the even partner,
    so nonnegativity of both becomes the box ``0 <= even <= marginal``.
    The guessing probability becomes ``(x0 + x4) - (x2 + x6) + 1/2``.
    """
    t = _as_table(t)
    if not t.is_symmetric():
        raise ReductionInapplicable(
            "reduced form needs P(0,0)=P(1,1) and P(0,1)=P(1,0) in every setting; use build_full"
        )
    n = 24
    upper = np.empty(n)
    for blk in BLOCKS:
        x, y = SETTING_OF[blk]
        for k in EVEN:
            a, b, _ = outcome_bits(k)
            upper[reduced_index(blk, k)] = t.probs[x, y, a, b]

    rows, labels = [], []
    for i in (0, 4):
        for b1, b2 in ALICE_PAIRS:
            r = np.zeros(n)
            r[reduced_index(b1, i)] += 1
            r[reduced_index(b1, i + 2)] += 1
            r[reduced_index(b2, i)] -= 1
            r[reduced_index(b2, i + 2)] -= 1
            rows.append(r)
            labels.append(f"alice-eve ns {b1}{i}+{b1}{i + 2}={b2}{i}+{b2}{i + 2}")
    for j in (0, 2):
        for b1, b2 in BOB_PAIRS:
            r = np.zeros(n)
            r[reduced_index(b1, j)] += 1
            r[reduced_index(b1, j + 4)] += 1
            r[reduced_index(b2, j)] -= 1
            r[reduced_index(b2, j + 4)] -= 1
            rows.append(r)
            labels.append(f"bob-eve ns {b1}{j}+{b1}{j + 4}={b2}{j}+{b2}{j + 4}")

    c = np.zeros(n)
    c[reduced_index("x", 0)] = c[reduced_index("x", 4)] = 1.0
    c[reduced_index("x", 2)] = c[reduced_index("x", 6)] = -1.0
    # x3 + x7 = (t01 - x2) + (t11 - x6)
    constant = t.probs[0, 0, 0, 1] + t.probs[0, 0, 1, 1]
    return LpInstance(
        objective=c,
        constant=constant,
        A_eq=np.array(rows),
        b_eq=np.zeros(len(rows)),
        lower=np.zeros(n),
        upper=upper,
        form="reduced",
        var_names=REDUCED_NAMES,
        row_labels=tuple(labels),
        p=t.p,
        center=upper / 2,
        table=t,
    )


def lift_solution(reduced_point, t, tol=1e-9):
    """Rebuild the 48-entry joint distribution from a reduced-form point."""
    if isinstance(t, LpInstance):
        t = t.table
    v = np.asarray(reduced_point, dtype=float)
    if v.shape != (24,):
        raise ValueError(f"expected a 24-vector, got shape {v.shape}")
    full = np.empty(48)
    for blk in BLOCKS:
        x, y = SETTING_OF[blk]
        for k in EVEN:
            a, b, _ = outcome_bits(k)
            even = v[reduced_index(blk, k)]
            full[full_index(x, y, a, b, 0)] = even
            full[full_index(x, y, a, b, 1)] = t.probs[x, y, a, b] - even
    if full.min() < -tol:
        j = int(np.argmin(full))
        raise ValueError(f"lifted variable {FULL_NAMES[j]} = {full[j]:.3g} < 0: input infeasible")
    return full


@dataclass
class RowCertificate:
    label: str
    family: str
    residual: float
    certified: bool


@dataclass
class RedundancyReport:
    rows: list
    tol: float
    retained_rank: int

    @property
    def all_certified(self):
        return all(r.certified for r in self.rows)

    @property
    def max_residual(self):
        return max(r.residual for r in self.rows)

    def by_family(self, family):
        return [r for r in self.rows if r.family == family]


def verify_redundancies(t, tol=1e-10):
    """Certify that every constraint dropped by the reduced form is implied.

    The retained system is the marginal equalities plus the e = 0
    no-signaling rows.  Each dropped row (normalization, Eve-marginal, and
    the e = 1 no-signaling rows) is tested for membership in the row space
    of the retained augmented matrix ``[A | b]`` by least squares.
    """
    t = _as_table(t)
    retained = retained_system(t)

    dropped = []
    rows, rhs, labels = _normalization_rows()
    dropped += [("normalization", r, b, lab) for r, b, lab in zip(rows, rhs, labels)]
    rows, rhs, labels = _eve_marginal_rows()
    dropped += [("eve-marginal", r, b, lab) for r, b, lab in zip(rows, rhs, labels)]
    rows, labels = _alice_eve_rows(es=(1,))
    dropped += [("alice-eve e=1", r, 0.0, lab) for r, lab in zip(rows, labels)]
    rows, labels = _bob_eve_rows(es=(1,))
    dropped += [("bob-eve e=1", r, 0.0, lab) for r, lab in zip(rows, labels)]

    out = []
    for family, row, b, label in dropped:
        res = span_residual(retained, np.append(row, b))
        out.append(RowCertificate(label, family, res, res <= tol))
    return RedundancyReport(out, tol, int(np.linalg.matrix_rank(retained)))


def retained_system(t):
    """Augmented ``[A | b]`` of the rows the reduced form keeps, in 48-variable space."""
    m_rows, m_rhs, _ = _marginal_rows(t)
    ae0, _ = _alice_eve_rows(es=(0,))
    be0, _ = _bob_eve_rows(es=(0,))
    return np.column_stack(
        [np.array(m_rows + ae0 + be0), np.array(m_rhs + [0.0] * (len(ae0) + len(be0)))]
    )


def span_residual(rows, target):
    """Max-norm residual of the least-squares fit of ``target`` by ``rows``."""
    coef, *_ = np.linalg.lstsq(rows.T, target, rcond=None)
    return float(np.max(np.abs(rows.T @ coef - target)))
