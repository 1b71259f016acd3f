"""A single LIME run versus the mean of many runs.

One run keeps only the top-k segments of a cheap surrogate, so it is sparse
in both domains at once and easily breaks the bound.  Averaging runs with
different masks spreads the mass back out.
"""

from upcheck.attrib import LimeConfig, explain_pair
from upcheck.synthgen import SynthConfig, generate_dataset
from upcheck.tinymodel import ModelHandle, TrainConfig, train
from upcheck.updetect import batch_detect

ds = generate_dataset(SynthConfig(n_train=2000, n_val_per_group=12))
params, _ = train(ds, TrainConfig())
h = ModelHandle(params)
samples = ds.val_freq

for runs in (1, 10, 50):
    method = "lime" if runs == 1 else f"lime-agg{runs}"
    cfg = LimeConfig(runs=runs)
    pairs = [explain_pair(h, s.values, s.label, method, cfg, s.sample_id) for s in samples]
    _, summary = batch_detect(pairs)
    print(f"{method:<10} {summary.line()}")
