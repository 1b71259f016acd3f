"""Frequency / amplitude response maps of a trained time-domain model.

The model is fed ``amplitude * sin(2 pi k t / N + phase) + noise`` for every
(amplitude, bin) cell of a grid and the target-class output is averaged over
``repeats`` noise draws.  Cell ``(i, j)`` uses its own generator seeded with
``(seed, i, j)``, so results do not depend on evaluation order.
"""

import csv
import io
import json
from dataclasses import asdict, dataclass, field
from typing import List

import numpy as np

from .spectral import tone

__all__ = ["ProbeConfig", "ResponseGrid", "amp_freq_response", "grid_to_csv", "grid_to_json",
           "grid_from_json"]


@dataclass
class ProbeConfig:
    freq_bins: List[int] = field(default_factory=lambda: list(range(1, 33)))
    amplitudes: List[float] = field(default_factory=lambda: [0.25 * i for i in range(1, 13)])
    noise_sigma: float = 0.01
    repeats: int = 8
    seed: int = 0
    target: int = 0
    random_phase: bool = False

    def validate(self, n):
        if not self.freq_bins or not self.amplitudes:
            raise ValueError("freq_bins and amplitudes must be non-empty")
        for b in self.freq_bins:
            if not 0 < int(b) <= n // 2:
                raise ValueError(f"freq_bins: bin {b} outside (0, {n // 2}]")
        if not np.all(np.isfinite(self.amplitudes)):
            raise ValueError("amplitudes must be finite")
        if self.repeats < 1:
            raise ValueError("repeats must be >= 1")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be >= 0")
        return self


@dataclass
class ResponseGrid:
    """Mean (and std) target output, rows = amplitudes, columns = bins."""

    mean: np.ndarray
    std: np.ndarray
    config: ProbeConfig


def amp_freq_response(h, cfg: ProbeConfig) -> ResponseGrid:
    """Probe ``h`` with single tones over the configured grid.

    With ``random_phase`` each repeat draws a uniform phase; otherwise the
    phase is zero.
    """
    if h.input_domain != "time":
        raise ValueError("amp_freq_response expects a time-domain handle")
    n = h.params.n_inputs
    cfg.validate(n)
    if not 0 <= cfg.target < h.params.n_outputs:
        raise ValueError(f"target {cfg.target} out of range")
    mean = np.empty((len(cfg.amplitudes), len(cfg.freq_bins)))
    std = np.empty_like(mean)
    for i, amp in enumerate(cfg.amplitudes):
        for j, k in enumerate(cfg.freq_bins):
            rng = np.random.default_rng([cfg.seed, i, j])
            noise = cfg.noise_sigma * rng.standard_normal((cfg.repeats, n))
            if cfg.random_phase:
                phases = rng.uniform(0, 2 * np.pi, cfg.repeats)
                base = np.array([tone(n, k, amp, ph) for ph in phases])
            else:
                base = tone(n, k, amp)[None, :]
            out = h(base + noise)[:, cfg.target]
            mean[i, j] = out.mean()
            std[i, j] = out.std()
    return ResponseGrid(mean, std, cfg)


def grid_to_csv(grid):
    """CSV text: header row of bins, first column amplitudes, body = mean response."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["amplitude"] + [str(b) for b in grid.config.freq_bins])
    for amp, row in zip(grid.config.amplitudes, grid.mean):
        w.writerow([repr(float(amp))] + [repr(float(v)) for v in row])
    return buf.getvalue()


def grid_to_json(grid):
    return json.dumps({"kind": "response-grid", "config": asdict(grid.config),
                       "mean": grid.mean.tolist(), "std": grid.std.tolist()}, sort_keys=True)


def grid_from_json(text):
    doc = json.loads(text)
    return ResponseGrid(np.array(doc["mean"], dtype=float), np.array(doc["std"], dtype=float),
                        ProbeConfig(**doc["config"]))
