"""Train the WGAN on a simulated population and draw synthetic rows.

Run with ``python3 demos/02_train_and_sample.py [iterations]``.  The default
of 600 iterations takes a few seconds; 3000 gives the reference quality.
"""
import sys

import numpy as np

from sleepgan import codec as codec_mod
from sleepgan.simulate import default_population, simulate_population
from sleepgan.temporalize import build_feature_matrix
from sleepgan.wgan import GanConfig, load_checkpoint, sample, save_checkpoint, train

iterations = int(sys.argv[1]) if len(sys.argv) > 1 else 600

# %% Real data: 2000 simulated person-days.
real = build_feature_matrix(simulate_population(default_population(2000, seed=17)))

# %% Encode.  Sleep minutes and age are scaled to [-1, 1] against fixed bounds
# and the categorical covariates become one-hot blocks, 52 columns in all.
codec = codec_mod.fit_codec(real)
x = codec_mod.encode_matrix(codec, real)
print(x.shape, x.min(), x.max())
print("codec digest", codec.digest()[:16])

# %% Train.  Five clipped critic updates per generator update.
config = GanConfig(iterations=iterations, seed=17)
cp, loss_log = train(x, config, codec)
w = np.array([v for _, v in loss_log])
for lo in range(0, len(w), max(1, len(w) // 6)):
    print(f"iterations {lo + 1:>5}-{lo + len(w[lo:lo + 100]):>5}  mean W estimate {w[lo:lo + 100].mean():+.5f}")

# %% Checkpoints are a single binary file with a checksum; resuming from one
# gives exactly the same result as never stopping.
save_checkpoint(cp, "/tmp/sleepgan_demo.ckpt")
back = load_checkpoint("/tmp/sleepgan_demo.ckpt")
assert back == cp

# %% Sampling always decodes to valid rows: minutes in [0, 60], ages in
# [15, 120], one category per block.
synth = sample(back, codec, 5000, seed=1)
print(synth.rows()[0])
print("real  mean per hour", np.round(real.sleep.mean(axis=0)[14:26], 1))
print("synth mean per hour", np.round(synth.sleep.mean(axis=0)[14:26], 1))
