"""Parametric population generator with known ground truth.

Each simulated person belongs to an age-band profile.  Their day type
(weekday or weekend) selects Normal distributions for the main sleep episode's
onset and duration; with probability ``p_nap`` a second, shorter episode is
added.  Person ``i`` draws from its own generator seeded with ``seed + i``, so
output does not depend on generation order.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import ConfigError
from .ingest import (
    AGE_MAX,
    AGE_MIN,
    DAYS,
    DEFAULT_SLEEP_CODE,
    MONTHS,
    SEXES,
    WINDOW_MIN,
    CovariateSet,
    EventRecord,
    PersonDay,
    format_events,
)

WEEKEND = (5, 6)  # indices of Sat, Sun in DAYS


@dataclass(frozen=True)
class SleepParams:
    """Main-episode distribution for one day type, in minutes since 4:00am."""

    onset_mean: float
    onset_sd: float
    duration_mean: float
    duration_sd: float


@dataclass(frozen=True)
class GroupProfile:
    age_lo: int
    age_hi: int
    weight: float
    weekday: SleepParams
    weekend: SleepParams
    p_nap: float = 0.0
    nap_start_mean: float = 660.0
    nap_start_sd: float = 60.0
    nap_duration_mean: float = 45.0
    nap_duration_sd: float = 15.0

    def validate(self):
        if not AGE_MIN <= self.age_lo <= self.age_hi <= AGE_MAX:
            raise ConfigError(f"bad age range [{self.age_lo}, {self.age_hi}]")
        if self.weight < 0:
            raise ConfigError("profile weight must be non-negative")
        if not 0.0 <= self.p_nap <= 1.0:
            raise ConfigError("p_nap must be a probability")
        for p in (self.weekday, self.weekend):
            if p.onset_sd < 0 or p.duration_sd < 0:
                raise ConfigError("standard deviations must be non-negative")
            if not 0 <= p.onset_mean < WINDOW_MIN or not 0 <= p.duration_mean < WINDOW_MIN:
                raise ConfigError("means must lie in [0, 1800)")
        if self.nap_start_sd < 0 or self.nap_duration_sd < 0:
            raise ConfigError("standard deviations must be non-negative")
        if not 0 <= self.nap_start_mean < WINDOW_MIN or not 0 <= self.nap_duration_mean < WINDOW_MIN:
            raise ConfigError("means must lie in [0, 1800)")

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        try:
            d["weekday"] = SleepParams(**d["weekday"])
            d["weekend"] = SleepParams(**d["weekend"])
            return cls(**d)
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"bad profile: {exc}") from None


@dataclass(frozen=True)
class PopulationConfig:
    profiles: tuple
    n_persons: int = 2000
    day_distribution: tuple = (1 / 7,) * 7
    month_distribution: tuple = (1 / 12,) * 12
    seed: int = 0

    def validate(self):
        if not self.profiles:
            raise ConfigError("need at least one profile")
        for p in self.profiles:
            p.validate()
        if not np.isclose(sum(p.weight for p in self.profiles), 1.0, atol=1e-9):
            raise ConfigError("profile weights must sum to 1")
        if self.n_persons < 1:
            raise ConfigError("n_persons must be >= 1")
        if self.seed < 0:
            raise ConfigError("seed must be non-negative")
        for name, dist, k in (("day_distribution", self.day_distribution, 7),
                              ("month_distribution", self.month_distribution, 12)):
            if len(dist) != k or min(dist) < 0 or not np.isclose(sum(dist), 1.0, atol=1e-9):
                raise ConfigError(f"{name} must be {k} non-negative values summing to 1")
        return self

    def to_dict(self):
        d = asdict(self)
        d["profiles"] = [asdict(p) for p in self.profiles]
        d["day_distribution"] = list(self.day_distribution)
        d["month_distribution"] = list(self.month_distribution)
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"unknown population config keys: {sorted(unknown)}")
        if "profiles" in d:
            d["profiles"] = tuple(GroupProfile.from_dict(p) for p in d["profiles"])
        else:
            d["profiles"] = default_population().profiles
        for key in ("day_distribution", "month_distribution"):
            if key in d:
                d[key] = tuple(float(x) for x in d[key])
        return cls(**d).validate()

    @classmethod
    def from_json(cls, text):
        try:
            return cls.from_dict(json.loads(text))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"population config is not valid JSON: {exc}") from None


def default_population(n_persons=2000, seed=0) -> PopulationConfig:
    """Seven age bands: the young sleep longest (more on weekends), mid-life least.

    Mean main-episode durations (weekday / weekend, minutes):

    ======  =========  =========
    band    weekday    weekend
    ======  =========  =========
    15-24   540 (sd75) 620 (sd90)
    25-34   480        520
    35-44   425        450
    45-54   420        445
    55-64   450        470
    65-74   480        490
    75-90   500        505
    ======  =========  =========

    15-24 sleep varies most and shifts latest, and its weekend sleep is the
    longest; 35-54 sleep the least; the older bands sleep more than 35-54.
    Weekend episodes of 15-24 can run past 10:00am and are truncated there.
    """
    W = SleepParams
    profiles = (
        GroupProfile(15, 24, 0.16, W(1140, 75, 540, 75), W(1170, 90, 620, 90), p_nap=0.15),
        GroupProfile(25, 34, 0.17, W(1110, 50, 480, 50), W(1140, 60, 520, 60), p_nap=0.10),
        GroupProfile(35, 44, 0.17, W(1110, 40, 425, 40), W(1125, 45, 450, 45), p_nap=0.05),
        GroupProfile(45, 54, 0.16, W(1100, 40, 420, 40), W(1120, 45, 445, 45), p_nap=0.05),
        GroupProfile(55, 64, 0.14, W(1080, 40, 450, 40), W(1090, 45, 470, 45), p_nap=0.15),
        GroupProfile(65, 74, 0.12, W(1070, 40, 480, 40), W(1075, 40, 490, 40), p_nap=0.30),
        GroupProfile(75, 90, 0.08, W(1050, 40, 500, 40), W(1050, 40, 505, 40), p_nap=0.40),
    )
    return PopulationConfig(profiles=profiles, n_persons=n_persons, seed=seed).validate()


def _episode(rng, start_mean, start_sd, dur_mean, dur_sd):
    start = int(np.clip(np.rint(rng.normal(start_mean, start_sd)), 0, WINDOW_MIN - 1))
    duration = max(1, int(np.rint(rng.normal(dur_mean, dur_sd))))
    return start, duration


def simulate_person(config: PopulationConfig, i: int) -> PersonDay:
    rng = np.random.default_rng(config.seed + i)
    weights = np.array([p.weight for p in config.profiles])
    prof = config.profiles[rng.choice(len(config.profiles), p=weights / weights.sum())]
    age = int(rng.integers(prof.age_lo, prof.age_hi + 1))
    sex = SEXES[int(rng.integers(len(SEXES)))]
    day = int(rng.choice(7, p=np.asarray(config.day_distribution)))
    month = int(rng.choice(12, p=np.asarray(config.month_distribution)))

    params = prof.weekend if day in WEEKEND else prof.weekday
    episodes = {}
    start, dur = _episode(rng, params.onset_mean, params.onset_sd,
                          params.duration_mean, params.duration_sd)
    episodes[start] = dur
    if rng.random() < prof.p_nap:
        start, dur = _episode(rng, prof.nap_start_mean, prof.nap_start_sd,
                              prof.nap_duration_mean, prof.nap_duration_sd)
        # same start as the main episode: keep one event with the longer duration
        episodes[start] = max(dur, episodes.get(start, 0))

    pid = f"p{i:06d}"
    events = tuple(EventRecord(pid, DEFAULT_SLEEP_CODE, s, d) for s, d in sorted(episodes.items()))
    return PersonDay(pid, CovariateSet(age, sex, DAYS[day], MONTHS[month]), events)


def simulate_population(config: PopulationConfig) -> list[PersonDay]:
    config.validate()
    return [simulate_person(config, i) for i in range(config.n_persons)]


def simulate_events_csv(config: PopulationConfig) -> str:
    return format_events(simulate_population(config))
