"""Figure rendering for evaluation reports and ablation sweeps."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .evaluator import EvalReport

_BAR_COLOR = "#4878a8"
_BASELINE_COLOR = "#b0b0b0"


def save_report_figure(reports: list[EvalReport], path: str | Path) -> Path:
    """Bar chart of pass@1 per setting, baseline greyed out."""
    path = Path(path)
    labels = [r.setting for r in reports]
    values = [r.pass_at_1 for r in reports]
    colors = [_BASELINE_COLOR if r.setting == "no_attention" else _BAR_COLOR
              for r in reports]
    fig, ax = plt.subplots(figsize=(max(4.0, 1.6 * len(reports)), 3.2))
    bars = ax.bar(labels, values, color=colors)
    ax.bar_label(bars, fmt="%.4f", fontsize=8)
    ax.set_ylim(0.0, 1.05)
    ax.set_ylabel("pass@1")
    title = f"{reports[0].benchmark} ({reports[0].nl_lang})" if reports else ""
    ax.set_title(title, fontsize=10)
    ax.grid(axis="y", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def save_sweep_figure(axis: str, points: list[tuple[str, float]],
                      path: str | Path) -> Path:
    """pass@1 across one ablation axis (one point per sweep value)."""
    path = Path(path)
    labels = [str(label) for label, _ in points]
    values = [value for _, value in points]
    fig, ax = plt.subplots(figsize=(max(4.0, 1.4 * len(points)), 3.2))
    ax.plot(range(len(points)), values, marker="o", color=_BAR_COLOR)
    ax.set_xticks(range(len(points)))
    ax.set_xticklabels(labels)
    ax.set_ylim(0.0, 1.05)
    ax.set_xlabel(axis)
    ax.set_ylabel("pass@1")
    ax.grid(alpha=0.3)
    for x, y in enumerate(values):
        ax.annotate(f"{y:.4f}", (x, y), textcoords="offset points",
                    xytext=(0, 6), ha="center", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
