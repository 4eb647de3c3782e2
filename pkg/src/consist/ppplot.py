"""p-value P-P plot: empirical fraction of p-values at or below each
significance threshold, against the threshold itself.

Under a well-calibrated test the p-values are uniform and the curve
hugs the diagonal; systematic excess above the upper significance band
signals miscalibration or model misfit.  The band is a one-sided
normal-approximation binomial bound at a configurable confidence.

Rendering writes a self-contained SVG plus a sibling CSV with the
plotted numbers.  Output bytes depend only on the input series: the
style sheet is versioned with the package, fonts are embedded as paths,
and no timestamps are written.
"""

from __future__ import annotations

import importlib.resources
from dataclasses import dataclass
from pathlib import Path

import matplotlib
import numpy as np
from scipy.stats import norm

matplotlib.use("Agg")  # headless rendering only
import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

XLABEL = "theoretical uniform distribution"
YLABEL = "empirical fraction p ≤ α"

DEFAULT_CONF = 0.95


def default_thresholds() -> np.ndarray:
    """alpha = 0.001, 0.002, ..., 1.000"""
    return np.arange(1, 1001) / 1000.0


@dataclass(frozen=True)
class PPSeries:
    thresholds: np.ndarray
    ecdf: np.ndarray
    band_upper: np.ndarray
    m: int

    def __post_init__(self):
        t = np.asarray(self.thresholds, dtype=float)
        if len(t) == 0 or np.any(t < 0.0) or np.any(t > 1.0):
            raise ValueError("thresholds must be non-empty and within [0, 1]")
        if np.any(np.diff(t) <= 0.0):
            raise ValueError("thresholds must be strictly increasing")
        if not (len(t) == len(self.ecdf) == len(self.band_upper)):
            raise ValueError("series arrays must have equal length")
        if self.m < 1:
            raise ValueError("m must be at least 1")


def ecdf_points(pvalues, thresholds) -> np.ndarray:
    """ecdf[j] = fraction of p-values <= thresholds[j]."""
    p = np.asarray(pvalues, dtype=float)
    if p.size == 0:
        raise ValueError("pvalues must be non-empty")
    if np.any(p < 0.0) or np.any(p > 1.0) or np.any(np.isnan(p)):
        raise ValueError("p-values must lie in [0, 1]")
    ranks = np.searchsorted(np.sort(p), np.asarray(thresholds, float), side="right")
    return ranks / p.size


def significance_band(m: int, thresholds, conf: float = DEFAULT_CONF) -> np.ndarray:
    """Upper band: alpha + z_conf * sqrt(alpha*(1-alpha)/m), clamped to [0, 1]."""
    if m < 1:
        raise ValueError("m must be at least 1")
    if not 0.0 < conf < 1.0:
        raise ValueError(f"conf={conf} outside (0, 1)")
    a = np.asarray(thresholds, dtype=float)
    z = norm.ppf(conf)
    return np.clip(a + z * np.sqrt(a * (1.0 - a) / m), 0.0, 1.0)


def build_series(pvalues, thresholds=None, conf: float = DEFAULT_CONF) -> PPSeries:
    t = default_thresholds() if thresholds is None else np.asarray(thresholds, float)
    p = np.asarray(pvalues, dtype=float)
    return PPSeries(
        thresholds=t,
        ecdf=ecdf_points(p, t),
        band_upper=significance_band(p.size, t, conf),
        m=p.size,
    )


def _style_path() -> Path:
    return Path(importlib.resources.files("consist") / "styles" / "ppplot.mplstyle")


def make_figure(series: PPSeries):
    """Assemble the figure; styling comes from the packaged style sheet."""
    fig, ax = plt.subplots()
    ax.plot([0, 1], [0, 1], linestyle="--", color="#888888", label="uniform")
    ax.plot(
        series.thresholds,
        series.band_upper,
        color="#d62728",
        label=f"upper band (m={series.m})",
    )
    ax.plot(
        series.thresholds,
        series.ecdf,
        drawstyle="steps-post",
        color="#1f77b4",
        label="observed",
    )
    ax.set_xlim(0, 1)
    ax.set_ylim(0, 1)
    ax.set_xlabel(XLABEL)
    ax.set_ylabel(YLABEL)
    ax.legend(loc="upper left")
    fig.tight_layout()
    return fig


def render_ppplot(series: PPSeries, out_path) -> tuple[Path, Path]:
    """Write <name>.svg and <name>.csv; returns both paths.

    ``out_path`` may be given with or without the .svg suffix.
    """
    base = Path(out_path)
    if base.suffix.lower() == ".svg":
        base = base.with_suffix("")
    svg_path = base.with_suffix(".svg")
    csv_path = base.with_suffix(".csv")

    with plt.style.context(str(_style_path())), plt.rc_context(
        {"svg.hashsalt": "consist-ppplot"}
    ):
        fig = make_figure(series)
        # a fixed hash salt plus a cleared date makes the bytes a pure
        # function of the plotted data
        fig.savefig(svg_path, format="svg", metadata={"Date": None})
        plt.close(fig)

    with open(csv_path, "w", encoding="utf-8", newline="") as fh:
        fh.write("alpha,ecdf,band_upper\n")
        for a, e, b in zip(series.thresholds, series.ecdf, series.band_upper):
            fh.write(f"{a:.6f},{e:.6f},{b:.6f}\n")
    return svg_path, csv_path
