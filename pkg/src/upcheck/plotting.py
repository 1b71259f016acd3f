"""Deterministic SVG renderings of attribution pairs and response grids."""

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

__all__ = ["plot_pair", "plot_grid"]

# fixed element ids and no timestamp, so identical inputs give identical files
_SVG_RC = {"svg.hashsalt": "upcheck", "svg.fonttype": "path"}


def _save(fig, path):
    with matplotlib.rc_context(_SVG_RC):
        fig.savefig(path, format="svg", metadata={"Date": None, "Creator": None})
    plt.close(fig)


def plot_pair(path, time_scores, freq_scores, series=None, title=""):
    """Two panels: the time attribution (over the series when given) and a bin stem plot."""
    t = np.asarray(time_scores, dtype=float)
    f = np.asarray(freq_scores, dtype=float)
    fig, (ax_t, ax_f) = plt.subplots(2, 1, figsize=(8, 5))
    if series is not None:
        ax_t.plot(np.arange(t.size), series, color="0.6", lw=1, label="series")
    ax_t.plot(np.arange(t.size), t, color="C3", lw=1.2, label="attribution")
    ax_t.set_xlabel("time step")
    ax_t.set_ylabel("attribution")
    ax_t.legend(loc="upper right", fontsize=8)
    ax_f.stem(np.arange(f.size), f, basefmt=" ")
    ax_f.set_xlabel("frequency bin")
    ax_f.set_ylabel("attribution")
    if title:
        ax_t.set_title(title)
    fig.tight_layout()
    _save(fig, path)


def plot_grid(path, mean, amplitudes, freq_bins, target=0):
    """Heatmap of a response grid (rows = amplitudes, columns = bins)."""
    mean = np.asarray(mean, dtype=float)
    fig, ax = plt.subplots(figsize=(7, 4))
    im = ax.imshow(mean, origin="lower", aspect="auto", cmap="coolwarm")
    ax.set_xticks(np.arange(len(freq_bins)))
    ax.set_xticklabels([str(b) for b in freq_bins], fontsize=6, rotation=90)
    ax.set_yticks(np.arange(len(amplitudes)))
    ax.set_yticklabels([f"{a:g}" for a in amplitudes], fontsize=6)
    ax.set_xlabel("frequency bin")
    ax.set_ylabel("amplitude")
    fig.colorbar(im, ax=ax, label=f"class {target} output")
    fig.tight_layout()
    _save(fig, path)
