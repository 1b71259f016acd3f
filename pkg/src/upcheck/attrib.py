"""Attribution methods usable in the time or the frequency explanation space.

Every method takes a :class:`~upcheck.tinymodel.ModelHandle`.  With a
frequency handle the input is the packed half spectrum ``pack(dft(x))`` and
the attribution is expressed per frequency bin:

* gradient methods (saliency, input x gradient, integrated gradients) produce
  one value per real parameter, folded to per-bin magnitudes with
  :func:`~upcheck.spectral.fold_bin_scores`;
* occlusion and LIME treat a bin (its real and imaginary parameter together)
  as the unit feature and return one signed value per bin.

Time-domain scores keep their sign; the detector takes magnitudes.
"""

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .spectral import _param_bin_index, dft, fold_bin_scores, n_bins, pack
from .tinymodel import input_gradient, wrap_frequency
from .updetect import AttributionPair

__all__ = [
    "AttributionResult",
    "LimeConfig",
    "OcclusionConfig",
    "IGConfig",
    "saliency",
    "input_x_gradient",
    "integrated_gradients",
    "occlusion",
    "lime",
    "lime_aggregate",
    "explain_pair",
    "METHODS",
    "resolve_method",
]


@dataclass
class AttributionResult:
    domain: str
    scores: np.ndarray
    method: str
    target: int
    sample_id: str = ""
    raw: Optional[np.ndarray] = None
    meta: dict = field(default_factory=dict)


@dataclass
class LimeConfig:
    """LIME settings.

    ``n_perturbations=None`` uses ``segments + extra_perturbations`` masks: a
    barely determined surrogate, so separate runs select different segments,
    as a small-sample LIME does.  Pass an explicit count (e.g. 500) for a
    stable, near-exact surrogate fit.
    """

    segment_len: int = 2
    k: Optional[int] = None
    n_perturbations: Optional[int] = None
    extra_perturbations: int = 2
    mask_probability: float = 0.5
    baseline: float = 0.0
    runs: int = 100
    seed: int = 0
    ridge: float = 1e-6

    def n_segments(self, domain, n):
        if domain == "frequency":
            return n_bins(n)
        return -(-n // self.segment_len)

    def resolved_k(self, n_segments):
        return self.k if self.k is not None else max(4, n_segments // 10)

    def resolved_perturbations(self, n_segments):
        if self.n_perturbations is None:
            return n_segments + self.extra_perturbations
        return self.n_perturbations

    def validate(self, domain, n):
        if self.segment_len < 1:
            raise ValueError("segment_len must be >= 1")
        s = self.n_segments(domain, n)
        k = self.resolved_k(s)
        n_pert = self.resolved_perturbations(s)
        if not 1 <= k <= s:
            raise ValueError(f"k must lie in [1, {s}] for {s} segments, got {k}")
        if n_pert < s:
            raise ValueError(f"n_perturbations ({n_pert}) must be >= segment count ({s})")
        if not 0 < self.mask_probability < 1:
            raise ValueError("mask_probability must lie in (0, 1)")
        if self.runs < 1:
            raise ValueError("runs must be >= 1")
        return s, k, n_pert


@dataclass
class OcclusionConfig:
    window_len: int = 10
    stride: int = 1
    baseline: float = 0.0


def _finish(h, scores_param, method, target, sample_id, meta=None, per_bin=False):
    """Wrap parameter-level scores; frequency results are folded unless per-bin."""
    if h.input_domain == "frequency" and not per_bin:
        return AttributionResult("frequency", fold_bin_scores(scores_param), method, target,
                                 sample_id, raw=scores_param, meta=meta or {})
    return AttributionResult(h.input_domain, scores_param, method, target, sample_id, meta=meta or {})


def saliency(h, x, target, cfg=None, sample_id=""):
    """Absolute input gradient."""
    g = input_gradient(h, x, target)
    return _finish(h, np.abs(g), "saliency", target, sample_id)


def input_x_gradient(h, x, target, cfg=None, sample_id=""):
    """Input times gradient (signed)."""
    x = np.asarray(x, dtype=float)
    return _finish(h, x * input_gradient(h, x, target), "input_x_gradient", target, sample_id)


def integrated_gradients(h, x, target, steps=50, baseline=0.0, sample_id=""):
    """Integrated gradients with a midpoint Riemann sum along the straight path."""
    if steps < 1:
        raise ValueError("steps must be >= 1")
    x = np.asarray(x, dtype=float)
    base = np.broadcast_to(np.asarray(baseline, dtype=float), x.shape)
    alphas = (np.arange(steps) + 0.5) / steps
    path = base + alphas[:, None] * (x - base)
    g = input_gradient(h, path, target).mean(axis=0)
    return _finish(h, (x - base) * g, "integrated_gradients", target, sample_id,
                   meta={"steps": steps})


def _output(h, X, target):
    out = h(X)
    return out[..., target]


def occlusion(h, x, target, cfg: Optional[OcclusionConfig] = None, sample_id=""):
    """Output drop when a window (time) or one bin (frequency) is set to the baseline.

    Time: ``score[i]`` is the mean drop over all windows covering ``i``
    (positions covered by no window score zero).  Frequency: one signed
    score per bin.
    """
    cfg = cfg or OcclusionConfig()
    x = np.asarray(x, dtype=float)
    n = x.size
    ref = _output(h, x, target)
    if h.input_domain == "frequency":
        owner = _param_bin_index(n)
        batch = np.repeat(x[None, :], n_bins(n), axis=0)
        batch[owner, np.arange(n)] = cfg.baseline
        scores = ref - _output(h, batch, target)
        return _finish(h, scores, "occlusion", target, sample_id, per_bin=True,
                       meta={"window_len": 1, "unit": "bin"})
    if not 1 <= cfg.window_len <= n or cfg.stride < 1:
        raise ValueError(f"need 1 <= window_len <= {n} and stride >= 1")
    starts = np.arange(0, n - cfg.window_len + 1, cfg.stride)
    batch = np.repeat(x[None, :], starts.size, axis=0)
    cover = np.zeros((starts.size, n), dtype=bool)
    for r, s in enumerate(starts):
        cover[r, s:s + cfg.window_len] = True
    batch[cover] = cfg.baseline
    drop = ref - _output(h, batch, target)
    counts = cover.sum(axis=0)
    total = drop @ cover
    scores = np.divide(total, counts, out=np.zeros(n), where=counts > 0)
    return _finish(h, scores, "occlusion", target, sample_id,
                   meta={"window_len": cfg.window_len, "stride": cfg.stride})


def _segments(h, n, cfg):
    if h.input_domain == "frequency":
        return _param_bin_index(n)
    return np.arange(n) // cfg.segment_len


def _lime_coefficients(h, x, target, cfg, seed):
    n = x.size
    n_seg, k, n_pert = cfg.validate(h.input_domain, n)
    seg = _segments(h, n, cfg)
    rng = np.random.default_rng(seed)
    keep = rng.random((n_pert, n_seg)) >= cfg.mask_probability
    inputs = np.where(keep[:, seg], x[None, :], cfg.baseline)
    y = _output(h, inputs, target)

    # intercept absorbed by centring; a constant response gives exact zeros
    A = keep - keep.mean(axis=0)
    yc = y - y.mean()
    ridged = False
    coef, _, rank, _ = np.linalg.lstsq(A, yc, rcond=None)
    if rank < n_seg:
        ridged = True
        coef = np.linalg.solve(A.T @ A + cfg.ridge * np.eye(n_seg), A.T @ yc)
    # drop rounding-level coefficients so exact dependence stays exactly sparse
    peak = np.abs(coef).max() if coef.size else 0.0
    coef[np.abs(coef) <= 1e-9 * peak] = 0.0
    if k < n_seg:
        order = np.argsort(-np.abs(coef), kind="stable")
        coef[order[k:]] = 0.0
    return coef, seg, {"k": int(k), "n_segments": int(n_seg), "n_perturbations": int(n_pert),
                       "ridge_refit": ridged}


def lime(h, x, target, cfg: Optional[LimeConfig] = None, sample_id="", seed=None):
    """LIME-style surrogate: least squares on random segment masks, top-``k`` kept.

    Time segments are ``segment_len`` consecutive steps; each kept coefficient
    is assigned to every position of its segment.  In the frequency domain
    each bin is a segment and the result is one value per bin.
    """
    cfg = cfg or LimeConfig()
    x = np.asarray(x, dtype=float)
    seed = cfg.seed if seed is None else seed
    coef, seg, meta = _lime_coefficients(h, x, target, cfg, seed)
    meta["seed"] = int(seed)
    if h.input_domain == "frequency":
        return _finish(h, coef, "lime", target, sample_id, meta=meta, per_bin=True)
    return _finish(h, coef[seg], "lime", target, sample_id, meta=meta)


def lime_aggregate(h, x, target, cfg: Optional[LimeConfig] = None, sample_id=""):
    """Mean of ``cfg.runs`` LIME runs with seeds ``seed, seed+1, ...``."""
    cfg = cfg or LimeConfig()
    if cfg.runs < 1:
        raise ValueError("runs must be >= 1")
    runs = [lime(h, x, target, cfg, seed=cfg.seed + r) for r in range(cfg.runs)]
    scores = np.mean([r.scores for r in runs], axis=0)
    meta = {"runs": cfg.runs, "seed": cfg.seed, "k": runs[0].meta["k"],
            "ridge_refits": sum(r.meta["ridge_refit"] for r in runs)}
    return AttributionResult(runs[0].domain, scores, f"lime-agg{cfg.runs}", target, sample_id, meta=meta)


@dataclass
class IGConfig:
    steps: int = 50
    baseline: float = 0.0


def _ig(h, x, target, cfg=None, sample_id=""):
    cfg = cfg or IGConfig()
    return integrated_gradients(h, x, target, steps=cfg.steps, baseline=cfg.baseline,
                                sample_id=sample_id)


METHODS = {
    "saliency": (saliency, None),
    "input_x_gradient": (input_x_gradient, None),
    "integrated_gradients": (_ig, IGConfig),
    "occlusion": (occlusion, OcclusionConfig),
    "lime": (lime, LimeConfig),
    "lime-agg": (lime_aggregate, LimeConfig),
}
_ALIASES = {"ixg": "input_x_gradient", "ig": "integrated_gradients"}


def resolve_method(name, options=None):
    """Return ``(canonical name, callable, config)`` for a method name.

    ``lime-aggN`` selects aggregated LIME with ``N`` runs.  ``options`` is a
    dict of config fields for the method.

    Raises
    ------
    KeyError
        Unknown method name.
    """
    options = dict(options or {})
    key = _ALIASES.get(name, name)
    runs = None
    if key.startswith("lime-agg") and key != "lime-agg":
        suffix = key[len("lime-agg"):]
        if not suffix.isdigit():
            raise KeyError(name)
        runs = int(suffix)
        key = "lime-agg"
    if key not in METHODS:
        raise KeyError(name)
    fn, cfg_cls = METHODS[key]
    cfg = cfg_cls(**options) if cfg_cls is not None else None
    if runs is not None:
        cfg = replace(cfg, runs=runs)
    tag = f"lime-agg{cfg.runs}" if key == "lime-agg" else key
    return tag, fn, cfg


def explain_pair(h_time, x, target, method="saliency", cfg=None, sample_id=""):
    """Attribute ``x`` in both explanation spaces and package the pair.

    The time handle explains ``x``; :func:`~upcheck.tinymodel.wrap_frequency`
    of it explains ``pack(dft(x))``.  All-zero attributions are flagged in
    ``pair.meta["degenerate"]`` instead of raising.

    Returns
    -------
    pair : AttributionPair
        ``time_scores`` of length N, ``freq_scores`` of length N//2 + 1.
    """
    if h_time.input_domain != "time":
        raise ValueError("explain_pair expects a time-domain handle")
    if isinstance(method, str):
        tag, fn, default_cfg = resolve_method(method)
        cfg = cfg if cfg is not None else default_cfg
    else:
        fn, tag = method, getattr(method, "__name__", "custom")
    x = np.asarray(x, dtype=float)
    h_freq = wrap_frequency(h_time)
    r_t = fn(h_time, x, target, cfg, sample_id=sample_id)
    r_f = fn(h_freq, pack(dft(x)), target, cfg, sample_id=sample_id)
    degenerate = [r.domain for r in (r_t, r_f)
                  if not np.all(np.isfinite(r.scores)) or not np.any(r.scores)]
    meta = {"method": tag, "target": int(target), "degenerate": degenerate,
            "time_meta": r_t.meta, "freq_meta": r_f.meta}
    return AttributionPair(r_t.scores, r_f.scores, sample_id, meta)
