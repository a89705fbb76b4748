"""Real-vs-synthetic comparisons: hourly means, covariate probabilities,
age x day-of-week stratified sleep totals and per-group quantile curves."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ._io import atomic_write
from .errors import EmptyGroup, EmptyInput, SchemaMismatch
from .ingest import AGE_MAX, DAYS, MONTHS, SEXES
from .temporalize import N_BINS, SLEEP_COLUMNS, FeatureMatrix

AGE_GROUPS = ("15-24", "25-34", "35-44", "45-54", "55-64", "65-74", "75+")
_GROUP_BOUNDS = ((15, 24), (25, 34), (35, 44), (45, 54), (55, 64), (65, 74), (75, AGE_MAX))
WEEKDAYS = DAYS[:5]
DEFAULT_QS = (0.25, 0.5, 0.75)


def age_group(age: int) -> str:
    for label, (lo, hi) in zip(AGE_GROUPS, _GROUP_BOUNDS):
        if lo <= age <= hi:
            return label
    raise ValueError(f"age {age} is outside every age group")


def age_group_index(ages) -> np.ndarray:
    """Vectorised age-group lookup; returns indices into AGE_GROUPS."""
    ages = np.asarray(ages)
    return np.searchsorted(np.array([lo for lo, _ in _GROUP_BOUNDS[1:]]), ages, side="right")


def _require(matrix):
    if matrix is None or len(matrix) == 0:
        raise EmptyInput("matrix is empty")


def mean_sleep_per_hour(matrix: FeatureMatrix) -> np.ndarray:
    _require(matrix)
    return matrix.sleep.mean(axis=0)


def covariate_probabilities(real: FeatureMatrix, synth: FeatureMatrix):
    """Empirical level frequencies in both matrices.

    Returns ``[(label, p_real, p_synth), ...]`` covering sex, day of week,
    month, age group and a derived ``weekday`` indicator (Mon-Fri).
    """
    for m in (real, synth):
        if not isinstance(m, FeatureMatrix) or m.columns != real.columns:
            raise SchemaMismatch("both inputs must be 34-column feature matrices")
        _require(m)

    def levels(m):
        out = []
        for name, codes, names in (("sex", m.sex, SEXES), ("day_of_week", m.day_of_week, DAYS),
                                   ("month", m.month, MONTHS),
                                   ("age_group", age_group_index(m.age), AGE_GROUPS)):
            counts = np.bincount(codes, minlength=len(names))
            out += [(f"{name}={lvl}", c / len(m)) for lvl, c in zip(names, counts)]
        out.append(("weekday", np.count_nonzero(m.day_of_week < 5) / len(m)))
        return out

    return [(label, float(pr), float(ps)) for (label, pr), (_, ps) in zip(levels(real), levels(synth))]


@dataclass
class Cell:
    age_group: str
    day_of_week: str
    n: int
    mean: float | None  # None marks an empty cell


def stratified_means(matrix: FeatureMatrix) -> list[list[Cell]]:
    """Mean total daily sleep (minutes) per (age group, day) cell.

    Grid is indexed ``[age_group][day_of_week]``.
    """
    _require(matrix)
    totals = matrix.sleep.sum(axis=1)
    groups = age_group_index(matrix.age)
    grid = []
    for g, glabel in enumerate(AGE_GROUPS):
        row = []
        for d, dlabel in enumerate(DAYS):
            mask = (groups == g) & (matrix.day_of_week == d)
            n = int(mask.sum())
            row.append(Cell(glabel, dlabel, n, float(totals[mask].mean()) if n else None))
        grid.append(row)
    return grid


def quantile(values, q: float) -> float:
    """Linear interpolation between order statistics at position (n-1)*q."""
    x = np.sort(np.asarray(values, dtype=np.float64))
    if x.size == 0:
        raise EmptyInput("no values")
    h = (x.size - 1) * q
    lo = math.floor(h)
    hi = min(lo + 1, x.size - 1)
    return float(x[lo] + (h - lo) * (x[hi] - x[lo]))


def quantile_curves(matrix: FeatureMatrix, group: str, qs=DEFAULT_QS) -> np.ndarray:
    """(len(qs), 30) array of per-hour quantiles over the rows of one age group."""
    if group not in AGE_GROUPS:
        raise EmptyGroup(f"unknown age group {group!r}")
    rows = matrix.sleep[age_group_index(matrix.age) == AGE_GROUPS.index(group)]
    if rows.shape[0] == 0:
        raise EmptyGroup(f"no rows in age group {group}")
    return np.array([[quantile(rows[:, h], q) for h in range(N_BINS)] for q in qs])


@dataclass
class QuantileCurves:
    group: str
    qs: tuple
    real: np.ndarray   # (len(qs), 30)
    synth: np.ndarray

    def iqr(self, which):
        curves = getattr(self, which)
        return curves[self.qs.index(0.75)] - curves[self.qs.index(0.25)]


@dataclass
class EvalReport:
    mean_real: np.ndarray
    mean_synth: np.ndarray
    covariate_probs: list
    stratified_real: list
    stratified_synth: list
    quantile_curves: dict = field(default_factory=dict)
    n_real: int = 0
    n_synth: int = 0

    @property
    def mean_per_hour(self):
        return list(zip(self.mean_real.tolist(), self.mean_synth.tolist()))

    @property
    def mae(self) -> float:
        return float(np.mean(np.abs(self.mean_real - self.mean_synth)))

    @property
    def max_covariate_deviation(self) -> float:
        return max(abs(pr - ps) for _, pr, ps in self.covariate_probs)

    def to_dict(self):
        grid = []
        for rr, rs in zip(self.stratified_real, self.stratified_synth):
            for cr, cs in zip(rr, rs):
                grid.append({"age_group": cr.age_group, "day_of_week": cr.day_of_week,
                             "real_mean": cr.mean, "synth_mean": cs.mean,
                             "n_real": cr.n, "n_synth": cs.n})
        quants = {}
        for g, qc in self.quantile_curves.items():
            entry = {"qs": list(qc.qs),
                     "real": qc.real.tolist(), "synth": qc.synth.tolist()}
            if 0.25 in qc.qs and 0.75 in qc.qs:
                entry["iqr_real"] = qc.iqr("real").tolist()
                entry["iqr_synth"] = qc.iqr("synth").tolist()
            quants[g] = entry
        return {
            "n_real": self.n_real,
            "n_synth": self.n_synth,
            "mean_per_hour": [{"column": c, "real": r, "synth": s}
                              for c, (r, s) in zip(SLEEP_COLUMNS, self.mean_per_hour)],
            "covariate_probs": [{"label": l, "p_real": pr, "p_synth": ps}
                                for l, pr, ps in self.covariate_probs],
            "stratified": grid,
            "quantile_curves": quants,
            "metrics": {"mean_per_hour_mae": self.mae,
                        "max_covariate_deviation": self.max_covariate_deviation},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def figure_csvs(self) -> dict[str, str]:
        """Plot-ready tables keyed by file name."""
        out = {}
        out["fig2_means.csv"] = _csv(("column", "real", "synth"),
                                     [(c, repr(r), repr(s)) for c, (r, s)
                                      in zip(SLEEP_COLUMNS, self.mean_per_hour)])
        out["fig3_probs.csv"] = _csv(("label", "p_real", "p_synth"),
                                     [(l, repr(pr), repr(ps)) for l, pr, ps in self.covariate_probs])
        d = self.to_dict()["stratified"]
        out["fig4_grid.csv"] = _csv(
            ("age_group", "day_of_week", "real_mean", "synth_mean", "n_real", "n_synth"),
            [(c["age_group"], c["day_of_week"], _fmt(c["real_mean"]), _fmt(c["synth_mean"]),
              c["n_real"], c["n_synth"]) for c in d])
        for g, qc in self.quantile_curves.items():
            head = ["column"] + [f"real_q{q:g}" for q in qc.qs] + [f"synth_q{q:g}" for q in qc.qs]
            has_iqr = 0.25 in qc.qs and 0.75 in qc.qs
            if has_iqr:
                head += ["iqr_real", "iqr_synth"]
            rows = []
            for h, c in enumerate(SLEEP_COLUMNS):
                row = [c] + [repr(float(v)) for v in qc.real[:, h]] + [repr(float(v)) for v in qc.synth[:, h]]
                if has_iqr:
                    row += [repr(float(qc.iqr("real")[h])), repr(float(qc.iqr("synth")[h]))]
                rows.append(row)
            out[f"fig5_quantiles_{g}.csv"] = _csv(head, rows)
        return out

    def write(self, out_dir):
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        atomic_write(out_dir / "report.json", self.to_json())
        for name, text in self.figure_csvs().items():
            atomic_write(out_dir / name, text)


def _fmt(v):
    return "" if v is None else repr(v)


def _csv(header, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def build_report(real: FeatureMatrix, synth: FeatureMatrix, groups_for_quantiles=("15-24",),
                 qs=DEFAULT_QS) -> EvalReport:
    """Run every comparison.  Quantile curves are skipped for groups that are
    empty in either matrix."""
    probs = covariate_probabilities(real, synth)
    curves = {}
    for g in groups_for_quantiles:
        try:
            curves[g] = QuantileCurves(g, tuple(qs), quantile_curves(real, g, qs),
                                       quantile_curves(synth, g, qs))
        except EmptyGroup:
            continue
    return EvalReport(
        mean_real=mean_sleep_per_hour(real),
        mean_synth=mean_sleep_per_hour(synth),
        covariate_probs=probs,
        stratified_real=stratified_means(real),
        stratified_synth=stratified_means(synth),
        quantile_curves=curves,
        n_real=len(real),
        n_synth=len(synth),
    )
