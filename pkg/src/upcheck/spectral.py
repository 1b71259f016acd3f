"""Unitary discrete Fourier analysis and synthesis for real time series.

All transforms use the ``1/sqrt(N)`` normalisation on both directions, so the
forward transform is unitary and Parseval's identity holds exactly (up to
rounding).

The explanation wrapper works on a *real* parameterisation of the
non-redundant half spectrum of a length ``N`` signal::

    [re(0), re(1), ..., re(N//2), im(1), ..., im(ceil(N/2) - 1)]

which always has exactly ``N`` entries.  The imaginary parts of the DC bin
(and of the Nyquist bin when ``N`` is even) are identically zero for real
signals and are therefore not stored.
"""

import numpy as np

__all__ = [
    "InvalidInputError",
    "dft",
    "dft_direct",
    "idft",
    "idft_direct",
    "n_bins",
    "pack",
    "unpack",
    "synthesize",
    "synthesis_adjoint",
    "synthesis_matrix",
    "fold_bin_scores",
    "mirror_bin_scores",
    "ablate_bins",
    "tone",
]


class InvalidInputError(ValueError):
    """Raised for non-finite, empty or wrongly shaped signals."""


def _as_signal(x, dtype=float, min_len=2):
    x = np.asarray(x, dtype=dtype)
    if x.ndim < 1 or x.shape[-1] < min_len:
        raise InvalidInputError(
            f"expected a sequence of length >= {min_len}, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise InvalidInputError("signal contains NaN or infinite entries")
    return x


def n_bins(n):
    """Number of non-redundant frequency bins of a real length-``n`` signal."""
    return n // 2 + 1


def dft(x):
    """Unitary DFT of ``x`` along its last axis.

    Parameters
    ----------
    x : array_like
        Real or complex samples, length ``N >= 2``.

    Returns
    -------
    numpy.ndarray
        Complex coefficients ``X[k] = N**-0.5 * sum_t x[t] exp(-2j pi k t / N)``.
    """
    x = _as_signal(x, dtype=complex)
    return np.fft.fft(x, norm="ortho")


def idft(X, return_residue=False):
    """Inverse unitary DFT, returning the real part.

    For a Hermitian-symmetric spectrum the discarded imaginary part is pure
    rounding noise.  With ``return_residue=True`` the largest absolute
    imaginary part is returned as well, so callers can detect spectra that do
    not correspond to real signals.
    """
    X = _as_signal(X, dtype=complex)
    z = np.fft.ifft(X, norm="ortho")
    if return_residue:
        return z.real, float(np.max(np.abs(z.imag)))
    return z.real


def _dft_kernel(n, sign):
    # reduce k*t modulo n before scaling to keep the phase accurate for large n
    k = np.arange(n)
    phase = np.outer(k, k) % n
    return np.exp(sign * 2j * np.pi * phase / n) / np.sqrt(n)


def dft_direct(x):
    """Reference O(N^2) unitary DFT by direct summation (1-D input only)."""
    x = _as_signal(x, dtype=complex)
    if x.ndim != 1:
        raise InvalidInputError("dft_direct expects a 1-D signal")
    return _dft_kernel(x.size, -1) @ x


def idft_direct(X):
    """Reference O(N^2) inverse unitary DFT; returns the complex result."""
    X = _as_signal(X, dtype=complex)
    if X.ndim != 1:
        raise InvalidInputError("idft_direct expects a 1-D spectrum")
    return _dft_kernel(X.size, +1) @ X


def pack(X):
    """Pack a (Hermitian) spectrum of length ``N`` into ``N`` real parameters."""
    X = np.asarray(X, dtype=complex)
    n = X.shape[-1]
    h = n // 2
    n_im = (n + 1) // 2 - 1
    return np.concatenate([X[..., : h + 1].real, X[..., 1 : 1 + n_im].imag], axis=-1)


def _half_spectrum(p):
    p = np.asarray(p, dtype=float)
    n = p.shape[-1]
    h = n // 2
    n_im = (n + 1) // 2 - 1
    half = p[..., : h + 1].astype(complex)
    half[..., 1 : 1 + n_im] += 1j * p[..., h + 1 :]
    return half


def unpack(p):
    """Inverse of :func:`pack`: rebuild the full Hermitian spectrum."""
    p = np.asarray(p, dtype=float)
    n = p.shape[-1]
    half = _half_spectrum(p)
    full = np.empty(p.shape[:-1] + (n,), dtype=complex)
    full[..., : half.shape[-1]] = half
    # mirror bins 1..ceil(n/2)-1 onto n-1..n//2+1
    m = (n + 1) // 2 - 1
    if m > 0:
        full[..., n - m :] = np.conj(half[..., 1 : m + 1][..., ::-1])
    return full


def synthesize(p):
    """Map real half-spectrum parameters to a real time series.

    This is the linear head placed in front of a time-domain model to obtain
    a frequency-domain model. Equivalent to ``idft(unpack(p))`` but computed
    with a real inverse FFT. Works on the last axis, so batches are fine.
    """
    p = _as_signal(p)
    return np.fft.irfft(_half_spectrum(p), n=p.shape[-1], norm="ortho")


def _bin_weights(n):
    w = np.full(n_bins(n), 2.0)
    w[0] = 1.0
    if n % 2 == 0:
        w[-1] = 1.0
    return w


def synthesis_adjoint(g):
    """Transpose of the :func:`synthesize` map applied to ``g``.

    Pulls a gradient with respect to the time series back to the real
    spectral parameters. Interior bins appear twice in the Hermitian
    spectrum (k and N-k), hence the factor two on those entries.
    """
    g = _as_signal(g)
    n = g.shape[-1]
    G = np.fft.rfft(g, norm="ortho") * _bin_weights(n)
    return pack_half(G, n)


def pack_half(half, n):
    """Pack a half spectrum of length ``n // 2 + 1`` for a length-``n`` signal."""
    half = np.asarray(half, dtype=complex)
    n_im = (n + 1) // 2 - 1
    return np.concatenate([half.real, half[..., 1 : 1 + n_im].imag], axis=-1)


def synthesis_matrix(n):
    """Dense ``n x n`` matrix of :func:`synthesize` (column j = S e_j)."""
    return synthesize(np.eye(n)).T


def _param_bin_index(n):
    # bin owning each packed parameter
    n_im = (n + 1) // 2 - 1
    return np.concatenate([np.arange(n // 2 + 1), np.arange(1, 1 + n_im)])


def fold_bin_scores(a):
    """Collapse a per-parameter attribution to one magnitude per frequency bin.

    ``score[k] = sqrt(a_re(k)**2 + a_im(k)**2)``, with ``a_im`` taken as zero
    for the DC bin and, for even ``N``, the Nyquist bin.
    """
    a = np.asarray(a, dtype=float)
    n = a.shape[-1]
    h = n // 2
    re = a[..., : h + 1]
    im = np.zeros_like(re)
    n_im = (n + 1) // 2 - 1
    im[..., 1 : 1 + n_im] = a[..., h + 1 :]
    return np.hypot(re, im)


def mirror_bin_scores(scores, n):
    """Expand half-spectrum bin scores to a length-``n`` full-spectrum vector."""
    scores = np.asarray(scores, dtype=float)
    if scores.shape[-1] != n_bins(n):
        raise InvalidInputError(
            f"expected {n_bins(n)} bin scores for length {n}, got {scores.shape[-1]}")
    full = np.empty(scores.shape[:-1] + (n,))
    full[..., : scores.shape[-1]] = scores
    m = (n + 1) // 2 - 1
    if m > 0:
        full[..., n - m :] = scores[..., 1 : m + 1][..., ::-1]
    return full


def ablate_bins(x, bins):
    """Zero the listed frequency bins (and their mirrors) and resynthesise.

    Parameters
    ----------
    x : array_like
        Real time series of length ``N``.
    bins : iterable of int
        Bin indices in ``[0, N//2]``.
    """
    x = _as_signal(x)
    n = x.shape[-1]
    bins = np.asarray(sorted(set(int(b) for b in bins)), dtype=int)
    if bins.size and (bins[0] < 0 or bins[-1] > n // 2):
        raise ValueError(f"bin indices must lie in [0, {n // 2}], got {bins.tolist()}")
    if not bins.size:
        return x.copy()
    X = np.fft.rfft(x, norm="ortho")
    X[..., bins] = 0.0
    return np.fft.irfft(X, n=n, norm="ortho")


def tone(n, k, amplitude=1.0, phase=0.0, kind="sin"):
    """``amplitude * sin(2 pi k t / n + phase)`` (or cos) for ``t = 0..n-1``."""
    t = np.arange(n)
    arg = 2 * np.pi * k * t / n + phase
    return amplitude * (np.sin(arg) if kind == "sin" else np.cos(arg))
