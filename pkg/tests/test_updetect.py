import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from upcheck.spectral import dft
from upcheck.updetect import (AttributionPair, BatchSummary, DegenerateAttributionError, ViolationWitness,
                              batch_detect, check_corollary1, check_theorem1, concentration_epsilon,
                              detect_violation, detect_violation_reference, normalize_abs,
                              threshold_profile)


def delta(n, i=0):
    x = np.zeros(n)
    x[i] = 1.0
    return x


def test_delta_delta_witness():
    r = detect_violation(AttributionPair(delta(16, 3), delta(16, 5)))
    assert r.violated
    assert r.witness == ViolationWitness(eps_t=0.0, eps_f=0.0, n_t=1, n_f=1, lhs=1, rhs=16.0,
                                         threshold_t=0.0, threshold_f=0.0)


def test_delta_flat_not_violated():
    assert not detect_violation(AttributionPair(delta(16), np.ones(16))).violated
    assert not detect_violation(AttributionPair(delta(16), np.ones(9))).violated
    # the genuine transform pair of a delta
    assert not detect_violation(AttributionPair(delta(16), np.abs(dft(delta(16))))).violated


def test_hand_worked_small_cases():
    # [0.6, 0.8] against a delta: the only admissible pair has rhs 2 * 0.4^2 < 1
    assert not detect_violation(AttributionPair([3.0, 4.0], [0.0, 1.0])).violated
    r = detect_violation(AttributionPair([0, 0, 1, 0], [0, 0, 1]))
    assert (r.witness.lhs, r.witness.rhs) == (1, 4.0)
    r = detect_violation(AttributionPair([0, 0, 1, 0], [0, 0, 1]), spectrum_layout="mirrored")
    assert (r.witness.lhs, r.witness.rhs) == (1, 4.0)


def test_tie_rule_excludes_equal_values():
    q = normalize_abs([1.0, 1.0, 2.0, 0.0])
    eps, count = concentration_epsilon(q, q[0])
    assert count == 1
    np.testing.assert_allclose(eps, np.sqrt(2) / np.sqrt(6))
    thr, eps_all, counts = threshold_profile(q)
    np.testing.assert_allclose(thr, [0.0, 1 / np.sqrt(6), 2 / np.sqrt(6)])
    np.testing.assert_array_equal(counts, [3, 1, 0])
    assert eps_all[-1] == 1.0
    assert concentration_epsilon(q, q.max()) == (1.0, 0)


def test_theorem1_and_corollary_on_comb():
    comb = np.zeros(16)
    comb[::4] = 1.0
    X = dft(comb)
    X[np.abs(X) < 1e-12] = 0
    assert check_theorem1(comb, X) == (4, 4, True)
    assert check_corollary1(comb, X) == (8, True)
    assert check_theorem1(delta(16), delta(16)) == (1, 1, False)


@pytest.mark.parametrize("bad", [np.zeros(8), np.array([]), np.array([1.0, np.nan])])
def test_degenerate_inputs(bad):
    with pytest.raises(DegenerateAttributionError):
        normalize_abs(bad)


def test_batch_counts_errors():
    pairs = [AttributionPair(delta(8), delta(8), "a"), AttributionPair(np.zeros(8), delta(8), "b"),
             AttributionPair(delta(8), np.ones(8), "c")]
    reports, summary = batch_detect(pairs)
    assert [r.violated for r in reports] == [True, False, False]
    assert reports[1].error is not None
    assert (summary.total, summary.processed, summary.violated, summary.errored) == (3, 2, 1, 1)
    assert summary.line() == "violated 1/2 (50.00%), errored 1"
    with pytest.raises(ValueError):
        batch_detect(pairs, mode="fastest")
    with pytest.raises(ValueError):
        batch_detect([])


def test_batch_summary_nothing_processed():
    s = BatchSummary(total=2, violated=0, errored=2)
    assert s.processed == 0 and np.isnan(s.fraction)


def _brute_strongest(x_t, x_f):
    n = len(x_t)
    qt, qf = normalize_abs(x_t), normalize_abs(x_f)
    best = np.inf
    for a in np.unique(qt):
        for b in np.unique(qf):
            et, nt = concentration_epsilon(qt, a)
            ef, nf = concentration_epsilon(qf, b)
            rhs = n * (1 - et - ef) ** 2
            if et + ef < 1 and nt * nf < rhs:
                best = min(best, nt * nf / rhs)
    return best


def test_strongest_mode_minimises_ratio(rng):
    for _ in range(30):
        n = int(rng.integers(4, 40))
        x_t = rng.random(n) ** 4
        x_f = rng.random(n // 2 + 1) ** 4
        r = detect_violation(AttributionPair(x_t, x_f), mode="strongest")
        best = _brute_strongest(x_t, x_f)
        if np.isinf(best):
            assert not r.violated
        else:
            assert r.violated
            assert r.witness.lhs / r.witness.rhs == pytest.approx(best, rel=1e-12)
            assert detect_violation(AttributionPair(x_t, x_f)).violated


pairs_strategy = st.integers(2, 24).flatmap(lambda n: st.tuples(
    arrays(np.float64, n, elements=st.sampled_from([0.0, 0.5, 1.0, 2.0, 3.0])),
    arrays(np.float64, n // 2 + 1, elements=st.floats(0, 10))))


@settings(max_examples=300, deadline=None)
@given(pairs_strategy)
def test_matches_reference(pair):
    x_t, x_f = pair
    if not x_t.any() or not x_f.any():
        return
    w = detect_violation_reference(x_t, x_f)
    r = detect_violation(AttributionPair(x_t, x_f))
    assert r.violated == (w is not None)
    if w is not None:
        assert (r.witness.threshold_t, r.witness.threshold_f) == (w.threshold_t, w.threshold_f)
        assert (r.witness.n_t, r.witness.n_f) == (w.n_t, w.n_f)


@settings(max_examples=200, deadline=None)
@given(st.integers(2, 80).flatmap(
    lambda n: arrays(np.float64, n, elements=st.floats(-100, 100, allow_nan=False))))
def test_genuine_pairs_never_violate(x):
    if not np.any(np.abs(x) > 1e-6):
        return
    X = dft(x)
    assert not detect_violation(AttributionPair(np.abs(x), np.abs(X))).violated
    half = np.abs(X[: x.size // 2 + 1])
    assert not detect_violation(AttributionPair(x, half), spectrum_layout="mirrored").violated


def test_scale_and_sign_invariance(rng):
    for _ in range(20):
        n = int(rng.integers(4, 30))
        x_t, x_f = rng.standard_normal(n) ** 3, rng.standard_normal(n // 2 + 1) ** 3
        a = detect_violation(AttributionPair(x_t, x_f))
        b = detect_violation(AttributionPair(-1e-150 * x_t, 1e150 * x_f))
        assert a.violated == b.violated
