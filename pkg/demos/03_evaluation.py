"""Compare a synthetic matrix with the real one and write the figure tables.

Run with ``python3 demos/03_evaluation.py [out_dir]``.  Trains a model with
the default config first, which takes under a minute on one core.
"""
import sys

import numpy as np

from sleepgan.codec import encode_matrix, fit_codec
from sleepgan.evaluate import AGE_GROUPS, build_report
from sleepgan.simulate import default_population, simulate_population
from sleepgan.temporalize import build_feature_matrix
from sleepgan.wgan import GanConfig, sample, train

out_dir = sys.argv[1] if len(sys.argv) > 1 else "/tmp/sleepgan_report"

real = build_feature_matrix(simulate_population(default_population(2000, seed=17)))
codec = fit_codec(real)
cp, _ = train(encode_matrix(codec, real), GanConfig(seed=17), codec)
synth = sample(cp, codec, 20000, seed=17)

report = build_report(real, synth, ("15-24", "75+"))
print(f"mean-per-hour MAE {report.mae:.2f} min")
print(f"max covariate deviation {report.max_covariate_deviation:.3f}")

# %% Marginals, the worst few first.
for label, p_real, p_synth in sorted(report.covariate_probs, key=lambda t: -abs(t[1] - t[2]))[:6]:
    print(f"{label:>20}  real {p_real:.3f}  synth {p_synth:.3f}")

# %% Total sleep by age group and day.  Cells with few synthetic rows are noisy.
print("group    " + " ".join(f"{d:>6}" for d in ("Mon", "Tue", "Wed", "Thu", "Fri", "Sat", "Sun")))
for g, row in zip(AGE_GROUPS, report.stratified_synth):
    print(f"{g:>6}   " + " ".join(f"{c.mean:6.0f}" if c.n else "     -" for c in row))

# %% Spread within the youngest group, by hour of the night.
qc = report.quantile_curves["15-24"]
print("IQR real ", np.round(qc.real[2] - qc.real[0], 0)[16:26])
print("IQR synth", np.round(qc.synth[2] - qc.synth[0], 0)[16:26])

report.write(out_dir)
print("wrote", out_dir)
