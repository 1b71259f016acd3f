"""Uncertainty-principle violation checks for time/frequency attribution pairs.

A real sequence and its unitary DFT cannot both be concentrated on small
index sets: if ``x`` is ``eps_t``-concentrated on ``T`` and its transform is
``eps_f``-concentrated on ``F`` then ::

    |T| * |F| >= N * (1 - (eps_t + eps_f))**2

Two attributions of the same sample, one computed in the time domain and one
in the frequency domain, are not Fourier counterparts.  When they jointly
break the bound above, the two explanations must be highlighting different
features.  :func:`detect_violation` searches for such a certificate.

Threshold scan
--------------
Both vectors are made nonnegative and unit-norm.  For every pair of observed
values ``(thr_t, thr_f)``, entries ``<= thr`` are dropped from the support and
counted in ``eps``, entries ``> thr`` form the support.  Ties at a threshold
are always treated together.  Equality in either inequality is never a
violation.
"""

from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

from .spectral import mirror_bin_scores, n_bins

__all__ = [
    "DegenerateAttributionError",
    "AttributionPair",
    "ViolationWitness",
    "ViolationReport",
    "BatchSummary",
    "normalize_abs",
    "concentration_epsilon",
    "check_theorem1",
    "check_corollary1",
    "threshold_profile",
    "detect_violation",
    "detect_violation_reference",
    "batch_detect",
    "MODES",
    "LAYOUTS",
]

MODES = ("first-found", "strongest")
LAYOUTS = ("half", "mirrored")

# rows of the (threshold_t x threshold_f) grid evaluated per numpy call
_BLOCK = 1 << 20


class DegenerateAttributionError(ValueError):
    """An attribution vector is all-zero, empty or non-finite."""


@dataclass
class AttributionPair:
    time_scores: np.ndarray
    freq_scores: np.ndarray
    sample_id: str = ""
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.time_scores = np.asarray(self.time_scores, dtype=float)
        self.freq_scores = np.asarray(self.freq_scores, dtype=float)


@dataclass(frozen=True)
class ViolationWitness:
    eps_t: float
    eps_f: float
    n_t: int
    n_f: int
    lhs: int
    rhs: float
    threshold_t: float
    threshold_f: float


@dataclass
class ViolationReport:
    sample_id: str
    violated: bool
    witness: Optional[ViolationWitness] = None
    mode: str = "first-found"
    error: Optional[str] = None

    def to_dict(self):
        return asdict(self)


@dataclass
class BatchSummary:
    total: int
    violated: int
    errored: int
    processed: int = field(init=False)

    def __post_init__(self):
        self.processed = self.total - self.errored

    @property
    def fraction(self):
        """Violated / successfully processed (NaN when nothing processed)."""
        return self.violated / self.processed if self.processed else float("nan")

    @property
    def percentage(self):
        return 100.0 * self.fraction

    def line(self):
        return (f"violated {self.violated}/{self.processed} "
                f"({self.percentage:.2f}%), errored {self.errored}")


def normalize_abs(x):
    """Return ``|x| / ||x||_2``.

    Raises
    ------
    DegenerateAttributionError
        If ``x`` is empty, all-zero or contains NaN/inf.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size == 0:
        raise DegenerateAttributionError(f"expected a non-empty 1-D vector, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise DegenerateAttributionError("attribution contains NaN or infinite entries")
    a = np.abs(x)
    peak = a.max()
    if peak == 0.0:
        raise DegenerateAttributionError("attribution is identically zero")
    # pre-scale by the peak so tiny or huge attributions do not under/overflow
    a = a / peak
    return a / np.sqrt(np.dot(a, a))


def concentration_epsilon(q, threshold):
    """Energy outside the support ``{n : q[n] > threshold}``.

    Returns ``(epsilon, support_count)`` where ``epsilon`` is the L2 norm of
    the entries ``<= threshold``.
    """
    q = np.asarray(q, dtype=float)
    outside = q <= threshold
    count = int(q.size - np.count_nonzero(outside))
    if count == 0:
        # everything excluded: the whole unit vector, exactly
        return 1.0, 0
    return float(np.linalg.norm(q[outside])), count


def check_theorem1(x_t, x_f, n_bound=None):
    """Exact-support bound ``N_t * N_f >= N``.

    ``n_bound`` defaults to ``len(x_t)``.  Returns ``(n_t, n_f, holds)``.
    """
    x_t = np.asarray(x_t)
    n_t = int(np.count_nonzero(x_t))
    n_f = int(np.count_nonzero(np.asarray(x_f)))
    n = x_t.size if n_bound is None else n_bound
    return n_t, n_f, n_t * n_f >= n


def check_corollary1(x_t, x_f, n_bound=None):
    """Additive form ``N_t + N_f >= 2 sqrt(N)``. Returns ``(sum, holds)``."""
    x_t = np.asarray(x_t)
    total = int(np.count_nonzero(x_t)) + int(np.count_nonzero(np.asarray(x_f)))
    n = x_t.size if n_bound is None else n_bound
    return total, total >= 2.0 * np.sqrt(n)


def threshold_profile(q):
    """Distinct thresholds of a normalised vector with their (eps, count).

    Parameters
    ----------
    q : ndarray
        Nonnegative unit vector.

    Returns
    -------
    thresholds, eps, counts : ndarray
        ``thresholds`` are the distinct values of ``q`` in ascending order;
        ``eps[i]`` and ``counts[i]`` equal ``concentration_epsilon(q, thresholds[i])``.
    """
    s = np.sort(q)
    csum = np.cumsum(s * s)
    # last position of each run of equal values
    last = np.flatnonzero(np.append(s[1:] != s[:-1], True))
    eps = np.sqrt(csum[last])
    eps[-1] = 1.0
    counts = s.size - (last + 1)
    return s[last], eps, counts


def _prepare(pair, spectrum_layout):
    t = np.asarray(pair.time_scores, dtype=float)
    f = np.asarray(pair.freq_scores, dtype=float)
    n = t.size
    if n < 2:
        raise DegenerateAttributionError(f"time attribution must have length >= 2, got {n}")
    if spectrum_layout not in LAYOUTS:
        raise ValueError(f"spectrum_layout must be one of {LAYOUTS}, got {spectrum_layout!r}")
    if spectrum_layout == "mirrored" and f.size == n_bins(n) and f.size != n:
        f = mirror_bin_scores(f, n)
    return normalize_abs(t), normalize_abs(f), n


def _witness(tt, et, nt, tf, ef, nf, n):
    s = et + ef
    return ViolationWitness(
        eps_t=float(et), eps_f=float(ef), n_t=int(nt), n_f=int(nf),
        lhs=int(nt) * int(nf), rhs=float(n * (1.0 - s) ** 2),
        threshold_t=float(tt), threshold_f=float(tf))


def detect_violation(pair, mode="first-found", spectrum_layout="half"):
    """Search for a threshold pair that breaks the concentration bound.

    Parameters
    ----------
    pair : AttributionPair
        Signed or unsigned attributions; magnitudes are used.
    mode : {"first-found", "strongest"}
        ``first-found`` returns the first witness in scan order (time
        threshold outer, frequency threshold inner, both ascending).
        ``strongest`` returns the witness with the smallest ``lhs / rhs``.
    spectrum_layout : {"half", "mirrored"}
        With ``mirrored``, half-spectrum bin scores are expanded to the full
        length before the scan.  The bound's ``N`` is ``len(time_scores)``
        in both cases.

    Returns
    -------
    ViolationReport
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    t, f, n = _prepare(pair, spectrum_layout)
    thr_t, eps_t, cnt_t = threshold_profile(t)
    thr_f, eps_f, cnt_f = threshold_profile(f)

    # once eps_t alone reaches 1 no frequency threshold can pass the guard;
    # eps is non-decreasing so only a prefix of the time thresholds matters
    live_t = int(np.searchsorted(eps_t, 1.0, side="left"))
    rows = max(1, _BLOCK // max(1, thr_f.size))
    best = None
    best_ratio = np.inf
    for start in range(0, live_t, rows):
        sl = slice(start, min(live_t, start + rows))
        s = eps_t[sl, None] + eps_f[None, :]
        lhs = cnt_t[sl, None] * cnt_f[None, :]
        rhs = n * (1.0 - s) ** 2
        hit = (s < 1.0) & (lhs < rhs)
        if not hit.any():
            continue
        if mode == "first-found":
            i, j = np.unravel_index(np.argmax(hit), hit.shape)
            i += start
            w = _witness(thr_t[i], eps_t[i], cnt_t[i], thr_f[j], eps_f[j], cnt_f[j], n)
            return ViolationReport(pair.sample_id, True, w, mode)
        ratio = np.where(hit, lhs / np.where(hit, rhs, 1.0), np.inf)
        k = np.argmin(ratio)
        if ratio.flat[k] < best_ratio:
            best_ratio = ratio.flat[k]
            i, j = np.unravel_index(k, ratio.shape)
            best = (i + start, j)
    if best is None:
        return ViolationReport(pair.sample_id, False, None, mode)
    i, j = best
    w = _witness(thr_t[i], eps_t[i], cnt_t[i], thr_f[j], eps_f[j], cnt_f[j], n)
    return ViolationReport(pair.sample_id, True, w, mode)


def detect_violation_reference(x_t, x_f):
    """Literal double loop over all sorted values, with no shortcuts.

    Intended as a test oracle; O(N^2) threshold pairs with O(N) work each.
    Returns the first witness as a :class:`ViolationWitness`, or ``None``.
    """
    n = len(x_t)
    x_t = normalize_abs(x_t)
    x_f = normalize_abs(x_f)

    def energy_outside(q, bar):
        # a threshold at the maximum drops the whole unit vector
        if bar >= q.max():
            return 1.0
        return float(np.linalg.norm(q * (q <= bar)))

    t_steps = sorted(x_t)
    f_steps = sorted(x_f)
    for i in range(len(t_steps)):
        for j in range(len(f_steps)):
            bar_t = t_steps[i]
            bar_f = f_steps[j]
            n_t = int(sum(1 for v in x_t if v > bar_t))
            n_f = int(sum(1 for v in x_f if v > bar_f))
            e_t = energy_outside(x_t, bar_t)
            e_f = energy_outside(x_f, bar_f)
            if e_t + e_f < 1:
                if n_t * n_f < n * (1 - (e_t + e_f)) ** 2:
                    return _witness(bar_t, e_t, n_t, bar_f, e_f, n_f, n)
    return None


def batch_detect(pairs: Sequence[AttributionPair], mode="first-found", spectrum_layout="half"):
    """Run :func:`detect_violation` over many pairs.

    Degenerate pairs produce a report with ``error`` set; they are excluded
    from the violation fraction and counted separately.

    Returns
    -------
    reports : list of ViolationReport
        In input order.
    summary : BatchSummary
    """
    if len(pairs) == 0:
        raise ValueError("batch_detect needs at least one pair")
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    if spectrum_layout not in LAYOUTS:
        raise ValueError(f"spectrum_layout must be one of {LAYOUTS}, got {spectrum_layout!r}")
    reports = []
    for pair in pairs:
        try:
            reports.append(detect_violation(pair, mode, spectrum_layout))
        except DegenerateAttributionError as exc:
            reports.append(ViolationReport(pair.sample_id, False, None, mode, error=str(exc)))
    errored = sum(r.error is not None for r in reports)
    violated = sum(r.violated for r in reports)
    return reports, BatchSummary(total=len(reports), violated=violated, errored=errored)
