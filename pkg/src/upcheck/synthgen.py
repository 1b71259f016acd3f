"""Synthetic shapelet / dominant-frequency classification data.

Each sample is Gaussian noise plus, depending on its group:

* a class shapelet (length ``shapelet_len``) added at a random offset,
* a class tone ``freq_amplitude * sin(2 pi k t / N + phase)`` at the class bin,

and, independently of the label, two non-feature shapelets and one
non-feature tone, each present with probability ``nonfeature_probability``.

Training samples carry exactly one of the two class features (half shapelet
only, half tone only, per class).  Validation samples come in three groups:
``both``, ``time-only`` (shapelet) and ``freq-only`` (tone).

Every sample draws from its own child generator, spawned from the dataset seed
by (split, index), so individual samples can be regenerated in isolation.
"""

import json
from functools import lru_cache
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import List, Optional, Tuple

import numpy as np

from .spectral import tone

__all__ = [
    "ConfigError",
    "DatasetFormatError",
    "SynthConfig",
    "LabeledSample",
    "SynthDataset",
    "GROUPS",
    "generate_dataset",
    "sample_components",
    "write_dataset",
    "read_dataset",
]

GROUPS = ("both", "time-only", "freq-only")
_SPLITS = ("train",) + GROUPS


class ConfigError(ValueError):
    """Invalid generator configuration; ``field`` names the offending entry."""

    def __init__(self, field_name, message):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


class DatasetFormatError(ValueError):
    """Malformed dataset file."""


@dataclass
class SynthConfig:
    length: int = 256
    n_classes: int = 2
    n_train: int = 8000
    n_val_per_group: int = 50
    seed: int = 0
    shapelet_len: int = 20
    shapelet_amplitude: float = 1.0
    class_freq_bins: Tuple[int, ...] = (6, 14)
    freq_amplitude: float = 1.0
    n_nonfeature_shapelets: int = 2
    nonfeature_freq_bin: int = 24
    nonfeature_freq_amplitude: float = 0.5
    nonfeature_probability: float = 0.5
    noise_sigma: float = 0.1
    random_phase: bool = True

    def __post_init__(self):
        self.class_freq_bins = tuple(int(b) for b in self.class_freq_bins)

    def validate(self):
        half = self.length // 2
        if self.length < 4:
            raise ConfigError("length", f"must be >= 4, got {self.length}")
        if self.n_classes < 2:
            raise ConfigError("n_classes", f"must be >= 2, got {self.n_classes}")
        if not 0 < self.shapelet_len < self.length:
            raise ConfigError("shapelet_len", f"must lie in (0, {self.length}), got {self.shapelet_len}")
        if self.n_train < 2 * self.n_classes or self.n_train % (2 * self.n_classes):
            raise ConfigError("n_train", f"must be a positive multiple of 2*n_classes={2 * self.n_classes}")
        if self.n_val_per_group < self.n_classes:
            raise ConfigError("n_val_per_group", f"must be >= n_classes, got {self.n_val_per_group}")
        if len(self.class_freq_bins) != self.n_classes:
            raise ConfigError("class_freq_bins", f"need one bin per class ({self.n_classes})")
        for b in self.class_freq_bins + (self.nonfeature_freq_bin,):
            if not 0 < b < half:
                raise ConfigError("class_freq_bins" if b in self.class_freq_bins else "nonfeature_freq_bin",
                                  f"bin {b} outside (0, {half})")
        if len(set(self.class_freq_bins + (self.nonfeature_freq_bin,))) != self.n_classes + 1:
            raise ConfigError("class_freq_bins", "class bins and the non-feature bin must be distinct")
        for name in ("shapelet_amplitude", "freq_amplitude", "nonfeature_freq_amplitude"):
            if not getattr(self, name) > 0:
                raise ConfigError(name, "must be > 0")
        if not 0 <= self.nonfeature_probability <= 1:
            raise ConfigError("nonfeature_probability", "must lie in [0, 1]")
        if not self.noise_sigma >= 0:
            raise ConfigError("noise_sigma", "must be >= 0")
        if self.n_nonfeature_shapelets < 0:
            raise ConfigError("n_nonfeature_shapelets", "must be >= 0")
        return self

    @classmethod
    def from_dict(cls, d):
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(sorted(unknown)[0], "unknown configuration field")
        try:
            return cls(**d)
        except (TypeError, ValueError) as exc:
            raise ConfigError("config", str(exc)) from exc

    def to_dict(self):
        d = asdict(self)
        d["class_freq_bins"] = list(self.class_freq_bins)
        return d


@dataclass
class LabeledSample:
    values: np.ndarray
    label: int
    has_shapelet: bool
    has_freq: bool
    group: str
    sample_id: str = ""

    def __eq__(self, other):
        if not isinstance(other, LabeledSample):
            return NotImplemented
        return (np.array_equal(self.values, other.values) and self.label == other.label
                and self.has_shapelet == other.has_shapelet and self.has_freq == other.has_freq
                and self.group == other.group and self.sample_id == other.sample_id)


@dataclass
class SynthDataset:
    config: SynthConfig
    train: List[LabeledSample] = field(default_factory=list)
    val_both: List[LabeledSample] = field(default_factory=list)
    val_time: List[LabeledSample] = field(default_factory=list)
    val_freq: List[LabeledSample] = field(default_factory=list)

    def group(self, name):
        return {"train": self.train, "both": self.val_both,
                "time-only": self.val_time, "freq-only": self.val_freq}[name]

    def arrays(self, name):
        """``(X, y)`` arrays for a split."""
        samples = self.group(name)
        X = np.array([s.values for s in samples], dtype=float).reshape(len(samples), -1)
        y = np.array([s.label for s in samples], dtype=int)
        return X, y

    def __iter__(self):
        for name in _SPLITS:
            yield from self.group(name)


def _max_shifted_overlap(shapes):
    """Largest normalised cross-correlation between any two patterns, any lag."""
    worst = 0.0
    energy = np.sum(shapes * shapes, axis=1)
    for i in range(len(shapes)):
        for j in range(i + 1, len(shapes)):
            c = np.correlate(shapes[i], shapes[j], "full") / np.sqrt(energy[i] * energy[j])
            worst = max(worst, float(np.abs(c).max()))
    return worst


@lru_cache(maxsize=16)
def _pattern_bank(seed, n_classes, n_nonfeature, length, amplitude, candidates=64):
    """Class and non-feature shapelets, fixed by the dataset seed.

    Patterns are i.i.d. Gaussian, rescaled to RMS ``shapelet_amplitude``.  Of
    ``candidates`` independent draws the one whose patterns overlap least
    under any shift is kept, so class shapelets are not near-copies of each
    other or of the non-features.
    """
    rng = np.random.default_rng([seed, 0])
    m = n_classes + n_nonfeature
    best, best_score = None, np.inf
    for _ in range(candidates):
        shapes = rng.standard_normal((m, length))
        shapes *= amplitude / np.sqrt(np.mean(shapes * shapes, axis=1, keepdims=True))
        score = _max_shifted_overlap(shapes) if m > 1 else 0.0
        if score < best_score:
            best, best_score = shapes, score
    best.setflags(write=False)
    return best


def _patterns(cfg):
    bank = _pattern_bank(cfg.seed, cfg.n_classes, cfg.n_nonfeature_shapelets,
                         cfg.shapelet_len, float(cfg.shapelet_amplitude))
    return bank[: cfg.n_classes], bank[cfg.n_classes:]


def _layout(cfg, split, index):
    """(label, has_shapelet, has_freq) of sample ``index`` in ``split``."""
    label = index % cfg.n_classes
    if split == "train":
        # per class, alternate shapelet-only and tone-only samples
        shapelet_only = (index // cfg.n_classes) % 2 == 0
        return label, shapelet_only, not shapelet_only
    has_shp, has_freq = {"both": (True, True), "time-only": (True, False),
                         "freq-only": (False, True)}[split]
    return label, has_shp, has_freq


def sample_components(cfg, split, index):
    """Additive components of one sample, before summation.

    Returns a dict with ``noise``, ``shapelet``, ``tone``, ``nonfeature`` arrays
    (zeros when absent) plus ``label``, ``has_shapelet``, ``has_freq``,
    ``offset`` (shapelet start or None) and ``nonfeatures`` (names present).
    """
    if split not in _SPLITS:
        raise ValueError(f"unknown split {split!r}")
    size = cfg.n_train if split == "train" else cfg.n_val_per_group
    if not 0 <= index < size:
        raise IndexError(f"{split} has {size} samples, got index {index}")
    label, has_shp, has_freq = _layout(cfg, split, index)
    class_shapes, nf_shapes = _patterns(cfg)
    n, L = cfg.length, cfg.shapelet_len
    rng = np.random.default_rng([cfg.seed, 1 + _SPLITS.index(split), index])

    # fixed draw order keeps every component reproducible
    noise = cfg.noise_sigma * rng.standard_normal(n)
    offset = int(rng.integers(0, n - L))
    phase = float(rng.uniform(0, 2 * np.pi)) if cfg.random_phase else 0.0
    nf_present = rng.random(len(nf_shapes) + 1) < cfg.nonfeature_probability
    nf_offsets = rng.integers(0, n - L, size=len(nf_shapes))
    nf_phase = float(rng.uniform(0, 2 * np.pi)) if cfg.random_phase else 0.0

    shapelet = np.zeros(n)
    if has_shp:
        shapelet[offset:offset + L] = class_shapes[label]
    tone_part = tone(n, cfg.class_freq_bins[label], cfg.freq_amplitude, phase) if has_freq else np.zeros(n)
    nonfeature = np.zeros(n)
    names = []
    for i, (present, off) in enumerate(zip(nf_present[:-1], nf_offsets)):
        if present:
            nonfeature[off:off + L] += nf_shapes[i]
            names.append(f"shapelet{i}")
    if nf_present[-1]:
        nonfeature += tone(n, cfg.nonfeature_freq_bin, cfg.nonfeature_freq_amplitude, nf_phase)
        names.append("tone")
    return {"noise": noise, "shapelet": shapelet, "tone": tone_part, "nonfeature": nonfeature,
            "label": label, "has_shapelet": has_shp, "has_freq": has_freq,
            "offset": offset if has_shp else None, "nonfeatures": names}


def generate_dataset(cfg: Optional[SynthConfig] = None) -> SynthDataset:
    """Generate train and the three validation groups, deterministic in ``cfg.seed``.

    Raises
    ------
    ConfigError
        If the configuration is inconsistent.
    """
    cfg = (cfg or SynthConfig()).validate()
    ds = SynthDataset(config=cfg)
    for split in _SPLITS:
        out = ds.group(split)
        n = cfg.n_train if split == "train" else cfg.n_val_per_group
        for i in range(n):
            c = sample_components(cfg, split, i)
            values = c["noise"] + c["shapelet"] + c["tone"] + c["nonfeature"]
            out.append(LabeledSample(values=values, label=c["label"], has_shapelet=c["has_shapelet"],
                                     has_freq=c["has_freq"], group=split, sample_id=f"{split}-{i:05d}"))
    return ds


def write_dataset(ds, path):
    """Write JSON lines: a ``{"config": ...}`` header then one sample per line."""
    path = Path(path)
    with path.open("w") as fh:
        fh.write(json.dumps({"config": ds.config.to_dict()}, sort_keys=True) + "\n")
        for s in ds:
            rec = {"id": s.sample_id, "label": s.label, "group": s.group,
                   "has_shapelet": s.has_shapelet, "has_freq": s.has_freq,
                   "values": [float(v) for v in s.values]}
            fh.write(json.dumps(rec, sort_keys=True) + "\n")


_REQUIRED = {"id": str, "label": int, "group": str, "has_shapelet": bool, "has_freq": bool, "values": list}


def read_dataset(path):
    """Read a file written by :func:`write_dataset`.

    Raises
    ------
    DatasetFormatError
        With the offending line number (and field) on any malformed input.
    """
    path = Path(path)
    with path.open() as fh:
        lines = fh.read().split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise DatasetFormatError(f"{path}: empty file")
    try:
        header = json.loads(lines[0])
        cfg = SynthConfig.from_dict(header["config"])
    except (json.JSONDecodeError, KeyError, TypeError, ConfigError) as exc:
        raise DatasetFormatError(f"{path}:1: bad config header ({exc})") from exc
    ds = SynthDataset(config=cfg)
    for lineno, line in enumerate(lines[1:], start=2):
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise DatasetFormatError(f"{path}:{lineno}: {exc}") from exc
        if not isinstance(rec, dict):
            raise DatasetFormatError(f"{path}:{lineno}: expected a JSON object")
        for key, typ in _REQUIRED.items():
            if key not in rec:
                raise DatasetFormatError(f"{path}:{lineno}: missing field {key!r}")
            if not isinstance(rec[key], typ) or (typ is int and isinstance(rec[key], bool)):
                raise DatasetFormatError(f"{path}:{lineno}: field {key!r} has wrong type")
        if rec["group"] not in _SPLITS:
            raise DatasetFormatError(f"{path}:{lineno}: field 'group' has unknown value {rec['group']!r}")
        values = np.array(rec["values"], dtype=float)
        if values.shape != (cfg.length,):
            raise DatasetFormatError(
                f"{path}:{lineno}: field 'values' has length {values.size}, config says {cfg.length}")
        ds.group(rec["group"]).append(LabeledSample(
            values=values, label=rec["label"], has_shapelet=rec["has_shapelet"],
            has_freq=rec["has_freq"], group=rec["group"], sample_id=rec["id"]))
    for split in _SPLITS:
        want = cfg.n_train if split == "train" else cfg.n_val_per_group
        got = len(ds.group(split))
        if got != want:
            raise DatasetFormatError(f"{path}: split {split!r} has {got} samples, config says {want}")
    return ds
