import numpy as np
import pytest

from upcheck.attrib import (LimeConfig, OcclusionConfig, explain_pair, input_x_gradient,
                            integrated_gradients, lime, lime_aggregate, occlusion, resolve_method,
                            saliency)
from upcheck.spectral import ablate_bins, dft, fold_bin_scores, n_bins, pack
from upcheck.tinymodel import ModelHandle, MlpParams, init_params, input_gradient, wrap_frequency


def linear_model(w, bias=0.25):
    """An MLP computing exactly ``w . x + bias`` (relu(z) - relu(-z) = z)."""
    n = len(w)
    W1 = np.stack([w, -np.asarray(w)], axis=1)
    W2 = np.array([[1.0], [-1.0]])
    return ModelHandle(MlpParams([n, 2, 1], [W1, W2], [np.zeros(2), np.array([bias])], "regression"))


def test_saliency_and_ixg(small_model, rng):
    x = rng.standard_normal(16)
    g = input_gradient(small_model, x, 2)
    np.testing.assert_array_equal(saliency(small_model, x, 2).scores, np.abs(g))
    np.testing.assert_array_equal(input_x_gradient(small_model, x, 2).scores, x * g)
    hf = wrap_frequency(small_model)
    p = pack(dft(x))
    r = saliency(hf, p, 2)
    assert r.scores.shape == (n_bins(16),)
    np.testing.assert_allclose(r.scores, fold_bin_scores(np.abs(input_gradient(hf, p, 2))))


def test_ig_exact_for_bias_free_relu_net(rng):
    # positively homogeneous: the gradient is constant along the ray from 0
    p = init_params([12, 9, 5, 2], seed=4)
    p.biases = [np.zeros_like(b) for b in p.biases]
    h = ModelHandle(p)
    x = rng.standard_normal(12)
    for steps in (1, 7):
        r = integrated_gradients(h, x, 1, steps=steps)
        assert r.scores.sum() == pytest.approx(h(x)[1] - h(np.zeros(12))[1], rel=1e-12)


def test_ig_single_step_is_midpoint_gradient(small_model, rng):
    x = rng.standard_normal(16)
    r = integrated_gradients(small_model, x, 0, steps=1, baseline=0.5)
    mid = 0.5 + 0.5 * (x - 0.5)
    np.testing.assert_allclose(r.scores, (x - 0.5) * input_gradient(small_model, mid, 0))


def test_ig_completeness_converges(rng):
    errs = {50: [], 5000: []}
    for c in range(8):
        h = ModelHandle(init_params([20, 32, 16, 2], seed=c))
        x = rng.standard_normal(20)
        diff = h(x)[0] - h(np.zeros(20))[0]
        for m in errs:
            errs[m].append(abs(integrated_gradients(h, x, 0, steps=m).scores.sum() - diff))
    assert np.mean(errs[5000]) < np.mean(errs[50]) / 20


def test_occlusion_time_windows_on_linear_model():
    h = linear_model([1.0, 1.0, 1.0, 1.0])
    x = np.array([1.0, 2.0, 3.0, 4.0])
    r = occlusion(h, x, 0, OcclusionConfig(window_len=2))
    # window drops 3, 5, 7 averaged over the windows covering each position
    np.testing.assert_allclose(r.scores, [3.0, 4.0, 6.0, 7.0])
    r = occlusion(h, x, 0, OcclusionConfig(window_len=2, stride=2))
    np.testing.assert_allclose(r.scores, [3.0, 3.0, 7.0, 7.0])
    with pytest.raises(ValueError):
        occlusion(h, x, 0, OcclusionConfig(window_len=5))


def test_occlusion_frequency_is_bin_ablation(small_model, rng):
    x = rng.standard_normal(16)
    r = occlusion(wrap_frequency(small_model), pack(dft(x)), 1)
    assert r.scores.shape == (9,)
    ref = small_model(x)[1]
    for k in range(9):
        assert r.scores[k] == pytest.approx(ref - small_model(ablate_bins(x, [k]))[1], abs=1e-12)


def test_lime_recovers_linear_contributions(rng):
    w = rng.standard_normal(12)
    h = linear_model(w)
    x = rng.standard_normal(12)
    r = lime(h, x, 0, LimeConfig(segment_len=1, k=12, n_perturbations=200))
    np.testing.assert_allclose(r.scores, w * x, atol=1e-10)
    r = lime(h, x, 0, LimeConfig(segment_len=4, k=3, n_perturbations=200))
    np.testing.assert_allclose(r.scores, np.repeat((w * x).reshape(3, 4).sum(axis=1), 4), atol=1e-10)
    # frequency segments are bins, and a bin's coefficient is its ablation effect
    hf = wrap_frequency(h)
    r = lime(hf, pack(dft(x)), 0, LimeConfig(k=7, n_perturbations=200))
    expected = [h(x)[0] - h(ablate_bins(x, [k]))[0] for k in range(7)]
    np.testing.assert_allclose(r.scores, expected, atol=1e-10)


def test_lime_top_k_and_determinism(small_model, rng):
    x = rng.standard_normal(16)
    cfg = LimeConfig(segment_len=1, k=4, seed=3)
    a = lime(small_model, x, 0, cfg)
    b = lime(small_model, x, 0, cfg)
    np.testing.assert_array_equal(a.scores, b.scores)
    assert np.count_nonzero(a.scores) <= 4
    assert a.meta["n_perturbations"] == 16 + cfg.extra_perturbations


def test_lime_aggregate_is_mean_of_runs(small_model, rng):
    x = rng.standard_normal(16)
    cfg = LimeConfig(segment_len=2, runs=5, seed=10)
    agg = lime_aggregate(small_model, x, 1, cfg)
    runs = [lime(small_model, x, 1, cfg, seed=10 + r).scores for r in range(5)]
    np.testing.assert_allclose(agg.scores, np.mean(runs, axis=0))
    assert agg.method == "lime-agg5"


@pytest.mark.parametrize("bad", [dict(k=0), dict(k=99), dict(n_perturbations=3), dict(mask_probability=1.0),
                                 dict(segment_len=0), dict(runs=0)])
def test_lime_config_validation(bad):
    with pytest.raises(ValueError):
        LimeConfig(**bad).validate("time", 32)


def test_resolve_method():
    assert resolve_method("ixg")[0] == "input_x_gradient"
    assert resolve_method("ig", {"steps": 3})[2].steps == 3
    tag, fn, cfg = resolve_method("lime-agg7")
    assert (tag, cfg.runs) == ("lime-agg7", 7)
    for bad in ("deeplift", "lime-aggx"):
        with pytest.raises(KeyError):
            resolve_method(bad)


def test_explain_pair_shapes_and_degenerate(rng):
    h = ModelHandle(init_params([10, 6, 2], seed=0))
    x = rng.standard_normal(10)
    pair = explain_pair(h, x, 1, "saliency", sample_id="s")
    assert pair.time_scores.shape == (10,) and pair.freq_scores.shape == (6,)
    assert pair.meta["degenerate"] == [] and pair.sample_id == "s"
    dead = ModelHandle(init_params([10, 6, 2], seed=0))
    dead.params.weights[0][:] = 0.0
    assert explain_pair(dead, x, 0, "saliency").meta["degenerate"] == ["time", "frequency"]


def test_lime_single_segment_dependence(rng):
    w = np.zeros(20)
    w[6:8] = [1.5, -0.5]  # the model only reads segment 3 (positions 6, 7)
    h = linear_model(w)
    x = rng.standard_normal(20) + 3
    # needs a full-rank mask design; the default S+2 budget is often rank deficient
    r = lime(h, x, 0, LimeConfig(segment_len=2, k=4, n_perturbations=60))
    assert np.flatnonzero(r.scores).tolist() == [6, 7]
    assert r.scores[6] == pytest.approx(1.5 * x[6] - 0.5 * x[7])
