"""Event CSV parsing and person-day grouping.

The interchange format has one row per activity episode::

    person_id,age,sex,day_of_week,month,activity,start_min,duration_min

``start_min`` counts minutes from 4:00am of the reference day.  Covariates are
repeated on every row of a person and must agree.
"""
from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass, field

from .errors import (
    CovariateConflict,
    DomainError,
    DuplicateEvent,
    EmptyInput,
    IngestError,
    MalformedRow,
)

log = logging.getLogger(__name__)

HEADER = (
    "person_id",
    "age",
    "sex",
    "day_of_week",
    "month",
    "activity",
    "start_min",
    "duration_min",
)
SEXES = ("female", "male")
DAYS = ("Mon", "Tue", "Wed", "Thu", "Fri", "Sat", "Sun")
MONTHS = ("Jan", "Feb", "Mar", "Apr", "May", "Jun",
          "Jul", "Aug", "Sep", "Oct", "Nov", "Dec")
AGE_MIN, AGE_MAX = 15, 120
WINDOW_MIN = 1800  # 4:00am to 10:00am next day
DEFAULT_SLEEP_CODE = "sleep"


@dataclass(frozen=True)
class EventRecord:
    person_id: str
    activity: str
    start_min: int
    duration_min: int

    def __post_init__(self):
        if not self.activity:
            raise DomainError("activity must be non-empty")
        if not 0 <= self.start_min < WINDOW_MIN:
            raise DomainError(f"start_min {self.start_min} outside [0, {WINDOW_MIN})")
        if self.duration_min < 1:
            raise DomainError(f"duration_min {self.duration_min} must be >= 1")

    @property
    def end_min(self) -> int:
        return self.start_min + self.duration_min

    def covers(self, t: int) -> bool:
        return self.start_min <= t < self.end_min


@dataclass(frozen=True)
class CovariateSet:
    age: int
    sex: str
    day_of_week: str
    month: str

    def __post_init__(self):
        if not AGE_MIN <= self.age <= AGE_MAX:
            raise DomainError(f"age {self.age} outside [{AGE_MIN}, {AGE_MAX}]")
        if self.sex not in SEXES:
            raise DomainError(f"unknown sex {self.sex!r}")
        if self.day_of_week not in DAYS:
            raise DomainError(f"unknown day_of_week {self.day_of_week!r}")
        if self.month not in MONTHS:
            raise DomainError(f"unknown month {self.month!r}")


@dataclass(frozen=True)
class PersonDay:
    person_id: str
    covariates: CovariateSet
    events: tuple[EventRecord, ...] = ()

    def __post_init__(self):
        if any(e.person_id != self.person_id for e in self.events):
            raise CovariateConflict(f"events of {self.person_id!r} carry another person_id")
        starts = [e.start_min for e in self.events]
        if starts != sorted(starts):
            raise DomainError(f"events of {self.person_id!r} are not sorted by start_min")


@dataclass
class ParseStats:
    rows: int = 0
    kept: int = 0
    dropped_activities: dict[str, int] = field(default_factory=dict)

    @property
    def dropped(self) -> int:
        return sum(self.dropped_activities.values())


def _int_field(value, name, line):
    try:
        return int(value.strip())
    except ValueError:
        raise MalformedRow(f"{name} is not an integer: {value!r}", line) from None


def parse_events_with_stats(csv_text, sleep_code=DEFAULT_SLEEP_CODE):
    """Parse event CSV text into ``(persons, stats)``.

    Persons are returned in order of first appearance.  A person whose rows are
    all non-sleep activities still yields a PersonDay with no events.  When the
    file has problems, every one of them is collected and the first is raised
    with the full list on its ``errors`` attribute.
    """
    if isinstance(csv_text, bytes):
        csv_text = csv_text.decode("utf-8")
    if not csv_text.strip():
        raise EmptyInput("event CSV is empty (header missing)")

    reader = csv.reader(io.StringIO(csv_text, newline=""))
    problems = []
    stats = ParseStats()
    covariates: dict[str, CovariateSet] = {}
    events: dict[str, list[EventRecord]] = {}
    starts: dict[str, set[int]] = {}

    header = next(reader)
    if tuple(h.strip() for h in header) != HEADER:
        raise MalformedRow(f"header must be {','.join(HEADER)}", 1)

    for row in reader:
        line = reader.line_num
        if not row or all(not cell.strip() for cell in row):
            continue
        stats.rows += 1
        try:
            if len(row) != len(HEADER):
                raise MalformedRow(f"expected {len(HEADER)} columns, got {len(row)}", line)
            pid, age, sex, day, month, activity, start, duration = (c.strip() for c in row)
            if not pid:
                raise MalformedRow("person_id is empty", line)
            age = _int_field(age, "age", line)
            start = _int_field(start, "start_min", line)
            duration = _int_field(duration, "duration_min", line)
            try:
                cov = CovariateSet(age, sex, day, month)
                event = EventRecord(pid, activity, start, duration)
            except DomainError as exc:
                raise DomainError(str(exc), line) from None

            seen = covariates.setdefault(pid, cov)
            if seen != cov:
                raise CovariateConflict(f"covariates of {pid!r} differ from an earlier row", line)
            events.setdefault(pid, [])
            if activity != sleep_code:
                stats.dropped_activities[activity] = stats.dropped_activities.get(activity, 0) + 1
                continue
            if start in starts.setdefault(pid, set()):
                raise DuplicateEvent(f"duplicate event for {pid!r} at start_min {start}", line)
            starts[pid].add(start)
            events[pid].append(event)
            stats.kept += 1
        except IngestError as exc:
            problems.append(exc)

    if problems:
        first = problems[0]
        first.errors = problems
        raise first
    if stats.dropped:
        log.info("dropped %d non-%s rows: %s", stats.dropped, sleep_code, stats.dropped_activities)

    persons = [
        PersonDay(pid, covariates[pid], tuple(sorted(evs, key=lambda e: e.start_min)))
        for pid, evs in events.items()
    ]
    return persons, stats


def parse_events(csv_text, sleep_code=DEFAULT_SLEEP_CODE) -> list[PersonDay]:
    """Parse event CSV text into one PersonDay per distinct person_id."""
    return parse_events_with_stats(csv_text, sleep_code)[0]


def canonical(persons):
    """Order-independent form of a person list, for comparisons."""
    return sorted(persons, key=lambda p: p.person_id)


def awake_fraction_at(persons, t_min: int) -> float:
    """Fraction of persons with no event covering minute ``t_min``."""
    if not persons:
        raise EmptyInput("no persons")
    if not 0 <= t_min <= WINDOW_MIN:
        raise DomainError(f"t_min {t_min} outside [0, {WINDOW_MIN}]")
    awake = sum(1 for p in persons if not any(e.covers(t_min) for e in p.events))
    return awake / len(persons)


def format_events(persons, activity=DEFAULT_SLEEP_CODE) -> str:
    """Render persons back to event CSV text (LF line endings).

    Persons without events produce no rows and so do not survive a round trip.
    """
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(HEADER)
    for p in persons:
        c = p.covariates
        for e in p.events:
            writer.writerow((p.person_id, c.age, c.sex, c.day_of_week, c.month,
                             e.activity or activity, e.start_min, e.duration_min))
    return buf.getvalue()
