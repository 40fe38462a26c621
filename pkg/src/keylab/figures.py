"""Matplotlib renderings of experiment reports (Agg backend, files only)."""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .adversary import CHANCE, COMPROMISED_AT, SECURE_MARGIN, Table3Result  # noqa: E402


def _save(fig, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    # fixed metadata keeps re-rendered files identical
    fig.savefig(path, dpi=120, bbox_inches="tight", metadata={"Software": None})
    plt.close(fig)
    return path


def table3_heatmap(result: Table3Result, path: Path) -> Path:
    """Recognition rate per cell, annotated yes/no (secure) and marked on mismatch."""
    rates = np.array([[result.cells[(r, c.label)].recognition_rate for c in result.columns] for r in result.rows])
    fig, ax = plt.subplots(figsize=(1.4 * len(result.columns) + 2.5, 0.7 * len(result.rows) + 1.5))
    im = ax.imshow(rates, cmap="RdYlGn_r", vmin=0.5, vmax=1.0, aspect="auto")
    ax.set_xticks(range(len(result.columns)), [c.label for c in result.columns])
    ax.set_yticks(range(len(result.rows)), result.rows)
    for i, r in enumerate(result.rows):
        secure = result.secure(r)
        for j in range(len(result.columns)):
            text = "yes" if secure[j] else "no"
            if secure[j] != result.expected[r][j]:
                text += " (!)"
            ax.text(j, i, text, ha="center", va="center", fontsize=9)
    fig.colorbar(im, ax=ax, label="recognition rate")
    ax.set_title(f"Key secure under reveal of initial keys ({result.trials_per_cell} trials/cell)")
    return _save(fig, path)


def rate_bars(
    labels: Sequence[str],
    rates: Sequence[float],
    intervals: Sequence[tuple[float, float]],
    path: Path,
    *,
    title: str,
    ylabel: str = "recognition rate",
    reference: float | None = CHANCE,
    band: tuple[float, float] | None = (CHANCE + SECURE_MARGIN, COMPROMISED_AT),
) -> Path:
    """Bar chart with interval whiskers, a reference line and an optional band."""
    rates = np.asarray(rates, dtype=float)
    lo = rates - np.array([i[0] for i in intervals])
    hi = np.array([i[1] for i in intervals]) - rates
    fig, ax = plt.subplots(figsize=(max(4.0, 1.2 * len(labels) + 1.5), 3.5))
    x = np.arange(len(labels))
    ax.bar(x, rates, yerr=np.vstack([np.clip(lo, 0, None), np.clip(hi, 0, None)]), capsize=4, color="#4878a8")
    if band is not None:
        ax.axhspan(band[0], band[1], color="grey", alpha=0.15, label="inconclusive")
    if reference is not None:
        ax.axhline(reference, color="black", lw=1, ls="--", label=f"chance = {reference:g}")
    ax.set_xticks(x, labels, rotation=20, ha="right")
    ax.set_ylim(0, 1.05)
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    ax.legend(loc="best", fontsize=8)
    return _save(fig, path)


def advantage_bars(results: dict, path: Path, *, title: str) -> Path:
    names = list(results)
    return rate_bars(
        names,
        [results[n].advantage_estimate for n in names],
        [results[n].confidence_interval for n in names],
        path,
        title=title,
        ylabel="distinguishing advantage",
        reference=None,
        band=None,
    )


def session_funnel(stats: dict, path: Path, *, title: str) -> Path:
    """Bit counts through one QKE session: raw, sifted, sampled, leaked, final."""
    keys = [k for k in ("raw_qubits", "sifted", "sample_size", "leaked_bits", "pa_length") if stats.get(k) is not None]
    fig, ax = plt.subplots(figsize=(5.5, 3.2))
    ax.bar(keys, [stats[k] for k in keys], color="#6a9f58")
    ax.set_yscale("log")
    ax.set_ylabel("bits")
    ax.set_title(title)
    return _save(fig, path)


def qber_histogram(qbers: Sequence[float], path: Path, *, threshold: float, title: str) -> Path:
    fig, ax = plt.subplots(figsize=(5.5, 3.2))
    ax.hist(np.asarray(qbers, dtype=float), bins=30, color="#a86a48")
    ax.axvline(threshold, color="black", ls="--", lw=1, label=f"abort threshold {threshold:g}")
    ax.set_xlabel("estimated QBER")
    ax.set_ylabel("sessions")
    ax.set_title(title)
    ax.legend(fontsize=8)
    return _save(fig, path)


def pvalue_histogram(p_values: Sequence[float], path: Path, *, alpha: float, title: str) -> Path:
    """Permutation p-values; under the null they are close to uniform."""
    fig, ax = plt.subplots(figsize=(5.5, 3.2))
    ax.hist(np.asarray(p_values, dtype=float), bins=20, range=(0, 1), color="#4878a8")
    ax.axvline(alpha, color="black", ls="--", lw=1, label=f"alpha = {alpha:g}")
    ax.set_xlabel("p-value")
    ax.set_ylabel("key bits")
    ax.set_title(title)
    ax.legend(fontsize=8)
    return _save(fig, path)
