"""Walk through turning sleep events into the hourly feature matrix.

Run with ``python3 demos/01_events_to_matrix.py``.
"""
import numpy as np

from sleepgan import ingest, temporalize
from sleepgan.simulate import default_population, simulate_events_csv

# %% A small simulated population, rendered as the event CSV the pipeline ingests.
text = simulate_events_csv(default_population(n_persons=8, seed=1))
print(text)

# %% Parse it.  Every row is validated; the first bad row would raise with
# its line number and the full error list attached.
persons, stats = ingest.parse_events_with_stats(text)
print(stats)
first = persons[0]
print(first.person_id, first.covariates)
for e in first.events:
    print(f"  sleep from minute {e.start_min} for {e.duration_min} min")

# %% Minutes are counted from 4am.  The window spans 30 hours, so 22:00 is
# minute 1080 and the 10am wake-up on the next day is minute 1800.
bins = temporalize.bin_sleep_minutes(first.events)
for name, minutes in zip(temporalize.SLEEP_COLUMNS, bins):
    if minutes:
        print(f"{name:>10}  {'#' * (minutes // 4)} {minutes}")

# %% Overlapping events are unioned, never double counted.
overlap = [ingest.EventRecord("x", "sleep", 100, 90), ingest.EventRecord("x", "sleep", 130, 60)]
print(temporalize.bin_sleep_minutes(overlap)[:4])  # [ 0 20 60 10]

# %% The whole population at once: 30 sleep columns plus four covariates.
m = temporalize.build_feature_matrix(persons)
print(m.columns)
print(m.sleep.shape, [temporalize.total_sleep_minutes(r) for r in m.rows()])
print("awake at 10am:", ingest.awake_fraction_at(persons, ingest.WINDOW_MIN))

# %% The same matrix as CSV, and back.
assert temporalize.FeatureMatrix.from_csv(m.to_csv()) == m
print(m.to_csv().splitlines()[1])
print("mean minutes asleep per hour:", np.round(m.sleep.mean(axis=0), 1))
