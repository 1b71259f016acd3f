"""Probe a trained model with pure tones over a grid of frequencies and amplitudes.

Bright columns show which bins push the target class.  Compare them with the
class tones used to build the data: neighbouring bins often respond too.
"""

import sys

import numpy as np

from upcheck.plotting import plot_grid
from upcheck.probe import ProbeConfig, amp_freq_response
from upcheck.synthgen import SynthConfig, generate_dataset
from upcheck.tinymodel import ModelHandle, TrainConfig, train

ds = generate_dataset(SynthConfig(n_train=2000, n_val_per_group=10))
params, _ = train(ds, TrainConfig())
h = ModelHandle(params)

grid = amp_freq_response(h, ProbeConfig(target=0))
col = grid.mean.mean(axis=0)
bins = grid.config.freq_bins
print("strongest bins for class 0:", [bins[i] for i in np.argsort(col)[::-1][:3]])
print("weakest bins for class 0:  ", [bins[i] for i in np.argsort(col)[:3]])
print("class bins:", ds.config.class_freq_bins)

out = sys.argv[1] if len(sys.argv) > 1 else "response.svg"
plot_grid(out, grid.mean, grid.config.amplitudes, bins, target=0)
print("wrote", out)
