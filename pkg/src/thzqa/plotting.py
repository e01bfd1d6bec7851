"""SVG report figures: MOS-vs-prediction scatter and Bland-Altman agreement."""

from __future__ import annotations

import io

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
from scipy import stats  # noqa: E402

from .evaluation import BlandAltmanReport, RegressionSummary  # noqa: E402

# 640x480 SVG user units (points) with fixed margins
FIG_SIZE = (640 / 72, 480 / 72)
MARGINS = {"left": 0.11, "right": 0.97, "bottom": 0.11, "top": 0.92}

STYLE = {
    "svg.hashsalt": "thzqa",
    "svg.fonttype": "path",
    "font.size": 10,
    "axes.titlesize": 11,
    "axes.labelsize": 10,
    "legend.fontsize": 8,
    "lines.linewidth": 1.2,
}


def _render(fig) -> bytes:
    buf = io.BytesIO()
    fig.savefig(buf, format="svg", metadata={"Date": None, "Creator": "thzqa"})
    plt.close(fig)
    return buf.getvalue()


def _figure():
    fig, ax = plt.subplots(figsize=FIG_SIZE)
    fig.subplots_adjust(**MARGINS)
    return fig, ax


def scatter_svg(mapped, mos, reg: RegressionSummary, metric: str) -> bytes:
    """Predicted vs subjective MOS with identity line, OLS line and 95% prediction band."""
    x = np.asarray(mapped, dtype=float)
    y = np.asarray(mos, dtype=float)
    with plt.rc_context(STYLE):
        fig, ax = _figure()
        lo, hi = min(x.min(), y.min()), max(x.max(), y.max())
        pad = 0.05 * (hi - lo or 1.0)
        grid = np.linspace(lo - pad, hi + pad, 200)
        n = x.size
        sxx = float(((x - x.mean()) ** 2).sum())
        half = stats.t.ppf(0.975, n - 2) * reg.residual_sd * np.sqrt(1 + 1 / n + (grid - x.mean()) ** 2 / sxx)
        fit = reg.slope * grid + reg.intercept
        ax.fill_between(grid, fit - half, fit + half, color="0.85", label="95% prediction band")
        ax.plot(grid, grid, color="0.3", linestyle="--", label="perfect match")
        ax.plot(grid, fit, color="tab:red", label=f"OLS fit (R$^2$ = {reg.r2:.2f})")
        ax.scatter(x, y, s=10, color="tab:blue", zorder=3, label=f"images (n = {n})")
        ax.set_xlim(grid[0], grid[-1])
        ax.set_xlabel(f"predicted MOS ({metric})")
        ax.set_ylabel("subjective MOS")
        ax.set_title(f"{metric}: band width {reg.band_width:.2f}")
        ax.legend(loc="upper left", frameon=False)
        return _render(fig)


def bland_altman_svg(mapped, mos, ba: BlandAltmanReport, metric: str) -> bytes:
    """Difference against average with the mean line and limits of agreement."""
    a = np.asarray(mapped, dtype=float)
    b = np.asarray(mos, dtype=float)
    avg, diff = (a + b) / 2.0, a - b
    with plt.rc_context(STYLE):
        fig, ax = _figure()
        ax.scatter(avg, diff, s=10, color="tab:blue", zorder=3)
        ax.axhline(ba.mean_difference, color="0.2", label=f"mean {round(ba.mean_difference, 4) + 0.0:+.4f}")
        ax.axhline(ba.upper, color="tab:red", linestyle="--", label=f"+1.96 SD {ba.upper:+.4f}")
        ax.axhline(ba.lower, color="tab:red", linestyle="--", label=f"-1.96 SD {ba.lower:+.4f}")
        ax.set_xlabel("average of predicted and subjective MOS")
        ax.set_ylabel("predicted - subjective MOS")
        ax.set_title(f"{metric}: {100 * ba.coverage:.1f}% within limits (n = {ba.n})")
        ax.legend(loc="upper right", frameon=False)
        return _render(fig)
