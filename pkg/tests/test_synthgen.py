import json

import numpy as np
import pytest

from upcheck.spectral import dft
from upcheck.synthgen import (GROUPS, ConfigError, DatasetFormatError, SynthConfig, generate_dataset,
                              read_dataset, sample_components, write_dataset)

SMALL = dict(length=64, n_train=40, n_val_per_group=6, class_freq_bins=(3, 7), nonfeature_freq_bin=11,
             shapelet_len=8)


@pytest.fixture(scope="module")
def small():
    return generate_dataset(SynthConfig(**SMALL))


def test_split_sizes_and_flags(small):
    assert len(small.train) == 40
    for g in GROUPS:
        assert len(small.group(g)) == 6
    assert all(s.has_shapelet and s.has_freq for s in small.val_both)
    assert all(s.has_shapelet and not s.has_freq for s in small.val_time)
    assert all(s.has_freq and not s.has_shapelet for s in small.val_freq)
    # training samples carry exactly one feature, balanced over classes
    assert all(s.has_shapelet != s.has_freq for s in small.train)
    labels = [s.label for s in small.train]
    assert labels.count(0) == labels.count(1) == 20


def test_components_sum_to_sample(small):
    cfg = small.config
    for split, samples in (("train", small.train), ("both", small.val_both)):
        for i in (0, 3):
            c = sample_components(cfg, split, i)
            total = c["noise"] + c["shapelet"] + c["tone"] + c["nonfeature"]
            np.testing.assert_array_equal(total, samples[i].values)


def test_class_tone_dominates_its_bin():
    cfg = SynthConfig(**SMALL, noise_sigma=0.0, nonfeature_probability=0.0)
    for label in (0, 1):
        c = sample_components(cfg, "freq-only", label)
        mags = np.abs(dft(c["tone"]))[: 33]
        assert np.argmax(mags) == cfg.class_freq_bins[label]
        assert not c["shapelet"].any() and c["offset"] is None


def test_shapelet_placement():
    cfg = SynthConfig(**SMALL, noise_sigma=0.0, nonfeature_probability=0.0)
    c = sample_components(cfg, "time-only", 1)
    nz = np.flatnonzero(c["shapelet"])
    assert nz.min() >= c["offset"] and nz.max() < c["offset"] + cfg.shapelet_len
    assert not c["tone"].any()


def test_deterministic_and_seed_dependent():
    a = generate_dataset(SynthConfig(**SMALL))
    b = generate_dataset(SynthConfig(**SMALL))
    c = generate_dataset(SynthConfig(**SMALL, seed=1))
    assert a.train == b.train and a.val_freq == b.val_freq
    assert a.train != c.train


@pytest.mark.parametrize("field,value", [("shapelet_len", 0), ("n_classes", 1), ("n_train", 7),
                                         ("class_freq_bins", (3,)), ("nonfeature_freq_bin", 40),
                                         ("noise_sigma", -1.0), ("nonfeature_probability", 2.0)])
def test_config_errors_name_field(field, value):
    with pytest.raises(ConfigError) as err:
        SynthConfig(**dict(SMALL, **{field: value})).validate()
    assert err.value.field == field


def test_unknown_config_field():
    with pytest.raises(ConfigError) as err:
        SynthConfig.from_dict({"lenght": 10})
    assert err.value.field == "lenght"


def test_roundtrip(small, tmp_path):
    path = tmp_path / "d.jsonl"
    write_dataset(small, path)
    back = read_dataset(path)
    assert back.config == small.config
    for g in ("train",) + GROUPS:
        assert back.group(g) == small.group(g)
    header = json.loads(path.read_text().splitlines()[0])
    assert header["config"]["length"] == 64


def _corrupt(path, lineno, mutate):
    lines = path.read_text().splitlines()
    lines[lineno] = mutate(lines[lineno])
    path.write_text("\n".join(lines) + "\n")


@pytest.mark.parametrize("mutate,match", [
    (lambda s: s[:-5], r"d\.jsonl:3:"),
    (lambda s: json.dumps(dict(json.loads(s), values=[1.0, 2.0])), "length"),
    (lambda s: json.dumps(dict(json.loads(s), label="zero")), "label"),
])
def test_read_rejects_corruption(small, tmp_path, mutate, match):
    path = tmp_path / "d.jsonl"
    write_dataset(small, path)
    _corrupt(path, 2, mutate)
    with pytest.raises(DatasetFormatError, match=match):
        read_dataset(path)


def test_read_rejects_truncated(small, tmp_path):
    path = tmp_path / "d.jsonl"
    write_dataset(small, path)
    path.write_text("\n".join(path.read_text().splitlines()[:-3]) + "\n")
    with pytest.raises(DatasetFormatError):
        read_dataset(path)


def test_freq_only_spectral_purity():
    cfg = SynthConfig(**dict(SMALL, noise_sigma=0.0, nonfeature_probability=0.0))
    ds = generate_dataset(cfg)
    for s in ds.val_freq:
        X = dft(s.values)
        k = cfg.class_freq_bins[s.label]
        mask = np.ones(64, bool)
        mask[[0, k, 64 - k]] = False
        assert np.sum(np.abs(X[mask]) ** 2) <= 1e-9


def test_shapelet_sample_minus_noise_is_windowed():
    cfg = SynthConfig(**dict(SMALL, nonfeature_probability=0.0))
    ds = generate_dataset(cfg)
    for i, s in enumerate(ds.val_time):
        c = sample_components(cfg, "time-only", i)
        rest = s.values - c["noise"]
        outside = np.ones(64, bool)
        outside[c["offset"]:c["offset"] + cfg.shapelet_len] = False
        assert np.all(rest[outside] == 0)


def test_class_balance(small):
    for g in ("train",) + GROUPS:
        labels = [s.label for s in small.group(g)]
        assert abs(labels.count(0) - labels.count(1)) <= 1
