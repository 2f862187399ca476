"""Figure rendering for the report path. Always headless (Agg)."""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402


def save_thread_distribution(histogram: dict[int, int], path) -> None:
    """Bar chart: how often the initiator posted, across extracted threads."""
    levels = sorted(histogram)
    counts = [histogram[l] for l in levels]
    fig, ax = plt.subplots(figsize=(6, 3.6))
    ax.bar(levels, counts, color="#4878a8", edgecolor="black", linewidth=0.4)
    ax.set_xlabel("posts by the initiating user")
    ax.set_ylabel("threads")
    ax.set_title("Thread distribution by initiator engagement")
    ax.set_xticks(levels)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_engagement(rows, rho, path) -> None:
    """Per-engagement-level thread counts with the green-outcome rate overlaid."""
    levels = [r[0] for r in rows]
    counts = [r[1] for r in rows]
    fracs = [r[2] for r in rows]
    fig, ax = plt.subplots(figsize=(6, 3.6))
    ax.bar(levels, counts, color="#b8c4d8", edgecolor="black", linewidth=0.4,
           label="threads")
    ax.set_xlabel("posts by the initiating user")
    ax.set_ylabel("threads")
    ax2 = ax.twinx()
    ax2.plot(levels, fracs, marker="o", color="#2e7d32", label="green fraction")
    ax2.set_ylabel("final-state green fraction")
    ax2.set_ylim(0, 1)
    title = "Engagement vs final outcome"
    if rho is not None:
        title += f" (rho = {rho:.2f})"
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_roc(curves: dict, path) -> None:
    """Overlay probabilistic ROC curves; expects {label: ProcCurve}."""
    fig, ax = plt.subplots(figsize=(5, 4.4))
    for label, curve in curves.items():
        xs = [p[0] for p in curve.points]
        ys = [p[1] for p in curve.points]
        style = {"linestyle": "--", "color": "#e07b39"} if label == "optimal" else {}
        ax.plot(xs, ys, label=f"{label} (AUC {curve.auc:.3f})", **style)
    ax.plot([0, 1], [0, 1], color="grey", linewidth=0.6, linestyle=":")
    ax.set_xlabel("expected false positive rate")
    ax.set_ylabel("expected true positive rate")
    ax.set_title("ROC over probabilistic labels")
    ax.legend(loc="lower right", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_harness_table(rows, path, title: str) -> None:
    """Grouped bars of macro precision/recall/F1 for ablation or strategy rows."""
    labels = [r.label for r in rows]
    x = range(len(rows))
    width = 0.26
    fig, ax = plt.subplots(figsize=(max(5.5, 1.7 * len(rows)), 3.8))
    ax.bar([i - width for i in x], [r.precision for r in rows], width, label="precision")
    ax.bar(list(x), [r.recall for r in rows], width, label="recall")
    ax.bar([i + width for i in x], [r.f1 for r in rows], width, label="F1")
    ax.set_xticks(list(x))
    ax.set_xticklabels(labels, rotation=20, ha="right", fontsize=8)
    ax.set_ylim(0, 1)
    ax.set_ylabel("macro score")
    ax.set_title(title)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
