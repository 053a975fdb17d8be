"""Parameter sweeps over the Werner weight p."""

from __future__ import annotations

import csv
import io
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import partial

import numpy as np

from nsqkd.exceptions import NsqkdError
from nsqkd.keyrate import KeyRateReport, evaluate_point
from nsqkd.protocol import werner_correlations

logger = logging.getLogger(__name__)

CSV_COLUMNS = ("p", "P_E", "I_AB", "I_BE_bound", "K_raw", "K")
FULL_REDUCED_TOL = 1e-9


class SweepPointError(NsqkdError):
    def __init__(self, p, cause):
        super().__init__(f"solve failed at p={p!r}: {cause}")
        self.p = p


def fmt(v):
    return format(float(v), ".12g")


def round12(v):
    return float(fmt(v))


@dataclass
class SweepResult:
    records: list
    p_min: float
    p_max: float
    steps: int
    threshold: float | None = None
    provenance: str = "werner"
    version: str = ""
    cross_checks: list = field(default_factory=list)

    def __post_init__(self):
        ps = [r.p for r in self.records]
        if ps != sorted(ps):
            raise ValueError("sweep records must be sorted by p")
        if len(self.records) != self.steps:
            raise ValueError(f"grid has {self.steps} steps but {len(self.records)} records")

    def as_array(self):
        return np.array([r.row() for r in self.records])

    def to_csv(self, stream=None):
        """Write ``p,P_E,I_AB,I_BE_bound,K_raw,K`` rows; returns the text when ``stream`` is None."""
        buf = stream if stream is not None else io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for r in self.records:
            r.check()
            writer.writerow([fmt(v) for v in r.row()])
        if stream is None:
            return buf.getvalue()

    def to_json_dict(self):
        for r in self.records:
            r.check()
        return {
            "grid": {"p_min": round12(self.p_min), "p_max": round12(self.p_max), "steps": self.steps},
            "threshold": None if self.threshold is None else round12(self.threshold),
            "provenance": self.provenance,
            "version": self.version,
            "records": [dict(zip(CSV_COLUMNS, (round12(v) for v in r.row()))) for r in self.records],
            "cross_checks": [{"p": round12(p), "full_minus_reduced": round12(d)} for p, d in self.cross_checks],
        }


def grid(p_min=0.0, p_max=1.0, steps=101):
    if steps < 1:
        raise ValueError("steps must be at least 1")
    if not 0.0 <= p_min <= p_max <= 1.0:
        raise ValueError(f"grid must satisfy 0 <= p_min <= p_max <= 1, got [{p_min}, {p_max}]")
    if steps == 1:
        return np.array([p_min])
    ps = np.linspace(p_min, p_max, steps)
    ps[-1] = p_max
    return ps


def _point(p, form, model):
    try:
        return evaluate_point(float(p), form=form, model=model)
    except (NsqkdError, ValueError, np.linalg.LinAlgError) as exc:
        raise SweepPointError(float(p), exc) from exc


def _map(fn, ps, jobs):
    if jobs <= 1 or len(ps) < 2:
        return [fn(p) for p in ps]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, ps, chunksize=max(1, len(ps) // (4 * jobs))))


def run_sweep(
    p_min=0.0,
    p_max=1.0,
    steps=101,
    form="reduced",
    jobs=1,
    model=werner_correlations,
    spot_checks=5,
    with_threshold=False,
    provenance="werner",
):
    """Evaluate key-rate records on an evenly spaced p-grid.

    ``form`` is ``"reduced"``, ``"full"`` or ``"both"``.  With ``"both"``
    every point is solved in both forms and the optimal values must agree;
    with ``"reduced"`` the full form is solved at ``spot_checks`` quantile
    points as a running cross-check.
    """
    from nsqkd import __version__
    from nsqkd.keyrate import find_threshold

    if form not in ("reduced", "full", "both"):
        raise ValueError(f"unknown form {form!r}")
    ps = grid(p_min, p_max, steps)
    primary = "full" if form == "full" else "reduced"
    records = _map(partial(_point, form=primary, model=model), ps, jobs)

    if form == "both":
        check_ps = list(ps)
    elif form == "reduced" and spot_checks:
        idx = np.unique(np.round(np.linspace(0, len(ps) - 1, min(spot_checks, len(ps)))).astype(int))
        check_ps = [ps[i] for i in idx]
    else:
        check_ps = []
    cross = []
    if check_ps:
        full = _map(partial(_point, form="full", model=model), check_ps, jobs)
        by_p = {r.p: r for r in records}
        for rf in full:
            diff = rf.guessing_prob - by_p[rf.p].guessing_prob
            if abs(diff) > FULL_REDUCED_TOL:
                raise SweepPointError(rf.p, f"full and reduced optima differ by {diff:.3g}")
            cross.append((rf.p, diff))

    threshold = None
    if with_threshold:
        threshold = find_threshold(model=model, form=primary).p_star
    return SweepResult(
        records=records,
        p_min=float(p_min),
        p_max=float(p_max),
        steps=len(ps),
        threshold=threshold,
        provenance=provenance,
        version=__version__,
        cross_checks=cross,
    )


__all__ = ["CSV_COLUMNS", "KeyRateReport", "SweepPointError", "SweepResult", "grid", "run_sweep"]
