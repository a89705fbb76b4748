"""Hourly minutes-asleep binning and the 34-column cross-sectional matrix."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, EmptyInput, MalformedRow
from .ingest import AGE_MAX, AGE_MIN, DAYS, MONTHS, SEXES, WINDOW_MIN

N_BINS = 30
BIN_MIN = 60
COVARIATE_COLUMNS = ("age", "sex", "day_of_week", "month")


def sleep_column_name(i: int) -> str:
    """Name of 1-based sleep column ``i``, e.g. ``hour1_4`` or ``hour21_0``."""
    return f"hour{i}_{(3 + i) % 24}"


SLEEP_COLUMNS = tuple(sleep_column_name(i) for i in range(1, N_BINS + 1))
COLUMNS = SLEEP_COLUMNS + COVARIATE_COLUMNS


def bin_sleep_minutes(events) -> np.ndarray:
    """Minutes asleep in each hour of the window, counting overlaps once."""
    covered = np.zeros(WINDOW_MIN, dtype=bool)
    for e in events:
        covered[e.start_min:min(e.start_min + e.duration_min, WINDOW_MIN)] = True
    return covered.reshape(N_BINS, BIN_MIN).sum(axis=1).astype(np.int64)


@dataclass
class FeatureMatrix:
    """Rows of 30 sleep features followed by four covariates.

    Covariates are stored as indices into ``SEXES``, ``DAYS`` and ``MONTHS``;
    ``rows()`` and the CSV form use the string tokens.
    """

    sleep: np.ndarray        # (n, 30) int64 minutes
    age: np.ndarray          # (n,) int64 years
    sex: np.ndarray          # (n,) index into SEXES
    day_of_week: np.ndarray  # (n,) index into DAYS
    month: np.ndarray        # (n,) index into MONTHS

    def __post_init__(self):
        self.sleep = np.asarray(self.sleep, dtype=np.int64).reshape(-1, N_BINS)
        n = self.sleep.shape[0]
        for name in COVARIATE_COLUMNS:
            arr = np.asarray(getattr(self, name), dtype=np.int64).reshape(-1)
            if arr.shape[0] != n:
                raise DomainError(f"column {name} has {arr.shape[0]} rows, expected {n}")
            setattr(self, name, arr)
        self.validate()

    columns = COLUMNS

    def validate(self):
        if self.sleep.size and (self.sleep.min() < 0 or self.sleep.max() > BIN_MIN):
            raise DomainError("sleep values must lie in [0, 60]")
        for name, lo, hi in (("age", AGE_MIN, AGE_MAX), ("sex", 0, len(SEXES) - 1),
                             ("day_of_week", 0, len(DAYS) - 1), ("month", 0, len(MONTHS) - 1)):
            arr = getattr(self, name)
            if arr.size and (arr.min() < lo or arr.max() > hi):
                raise DomainError(f"{name} values must lie in [{lo}, {hi}]")

    def __len__(self):
        return self.sleep.shape[0]

    def __eq__(self, other):
        if not isinstance(other, FeatureMatrix):
            return NotImplemented
        return all(np.array_equal(getattr(self, f), getattr(other, f))
                   for f in ("sleep",) + COVARIATE_COLUMNS)

    def row(self, i: int) -> tuple:
        return (*(int(v) for v in self.sleep[i]), int(self.age[i]), SEXES[self.sex[i]],
                DAYS[self.day_of_week[i]], MONTHS[self.month[i]])

    def rows(self):
        return [self.row(i) for i in range(len(self))]

    def take(self, index) -> "FeatureMatrix":
        return FeatureMatrix(self.sleep[index], self.age[index], self.sex[index],
                             self.day_of_week[index], self.month[index])

    @classmethod
    def from_rows(cls, rows) -> "FeatureMatrix":
        rows = list(rows)
        for r in rows:
            if len(r) != len(COLUMNS):
                raise DomainError(f"row has {len(r)} values, expected {len(COLUMNS)}")
        try:
            return cls(
                sleep=np.array([r[:N_BINS] for r in rows], dtype=np.int64).reshape(-1, N_BINS),
                age=np.array([r[N_BINS] for r in rows], dtype=np.int64),
                sex=np.array([SEXES.index(r[N_BINS + 1]) for r in rows], dtype=np.int64),
                day_of_week=np.array([DAYS.index(r[N_BINS + 2]) for r in rows], dtype=np.int64),
                month=np.array([MONTHS.index(r[N_BINS + 3]) for r in rows], dtype=np.int64),
            )
        except ValueError as exc:
            raise DomainError(f"invalid covariate token: {exc}") from None

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(COLUMNS)
        writer.writerows(self.rows())
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "FeatureMatrix":
        reader = csv.reader(io.StringIO(text, newline=""))
        header = next(reader, None)
        if header is None:
            raise EmptyInput("matrix CSV is empty")
        if tuple(h.strip() for h in header) != COLUMNS:
            raise MalformedRow("matrix header does not match the 34-column schema", 1)
        rows = []
        for row in reader:
            if not row:
                continue
            if len(row) != len(COLUMNS):
                raise MalformedRow(f"expected {len(COLUMNS)} columns, got {len(row)}",
                                   reader.line_num)
            try:
                nums = [int(v) for v in row[:N_BINS + 1]]
            except ValueError:
                raise MalformedRow("non-integer numeric value", reader.line_num) from None
            rows.append((*nums, *(v.strip() for v in row[N_BINS + 1:])))
        return cls.from_rows(rows)


def build_feature_matrix(persons) -> FeatureMatrix:
    """One row per person: binned sleep then covariates, in input order."""
    if not persons:
        raise EmptyInput("no persons to build a matrix from")
    return FeatureMatrix(
        sleep=np.stack([bin_sleep_minutes(p.events) for p in persons]),
        age=[p.covariates.age for p in persons],
        sex=[SEXES.index(p.covariates.sex) for p in persons],
        day_of_week=[DAYS.index(p.covariates.day_of_week) for p in persons],
        month=[MONTHS.index(p.covariates.month) for p in persons],
    )


def total_sleep_minutes(row) -> int:
    """Sum of the 30 sleep values of a row (a tuple row or a 30-vector)."""
    return int(sum(int(v) for v in list(row)[:N_BINS]))
