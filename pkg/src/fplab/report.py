"""Figure rendering for run reports.

Figures are written next to the delimited trace output; nothing is shown
interactively (Agg backend only).
"""

from __future__ import annotations

from pathlib import Path
from typing import Optional, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402


def render_run_figures(
    out_dir: Path,
    gap_series: Sequence[Sequence[tuple[int, float]]],
    absorption_rounds: Sequence[Optional[int]],
    terminal_counts: dict[str, int],
    rounds: int,
) -> list[Path]:
    """Render per-run figures into ``out_dir``; returns the files written.

    ``gap_series`` holds one (round, max gap) series per replication (may be
    empty when gap recording was off); ``absorption_rounds`` one entry per
    replication, None when the run did not absorb.
    """
    written: list[Path] = []

    series = [s for s in gap_series if s]
    if series:
        fig, ax = plt.subplots(figsize=(6.0, 3.6))
        for s in series:
            xs = [t for t, _ in s]
            ys = [g for _, g in s]
            ax.plot(xs, ys, color="tab:blue", alpha=max(0.08, 1.0 / len(series)))
        ax.set_xlabel("round")
        ax.set_ylabel("max optimality gap")
        ax.set_xlim(1, rounds)
        ax.set_ylim(bottom=0)
        ax.set_title(f"Maximal gap over {len(series)} replications")
        fig.tight_layout()
        path = out_dir / "gaps.png"
        fig.savefig(path, dpi=120)
        plt.close(fig)
        written.append(path)

    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(8.0, 3.6))
    absorbed = [r for r in absorption_rounds if r is not None]
    if absorbed:
        ax1.hist(absorbed, bins=min(30, max(5, len(set(absorbed)))), color="tab:green")
    ax1.set_xlabel("absorption round")
    ax1.set_ylabel("replications")
    ax1.set_title(
        f"Absorbed {len(absorbed)}/{len(absorption_rounds)} within {rounds} rounds"
    )
    labels = sorted(terminal_counts)
    ax2.bar(range(len(labels)), [terminal_counts[z] for z in labels], color="tab:orange")
    ax2.set_xticks(range(len(labels)))
    ax2.set_xticklabels(labels, rotation=45, ha="right")
    ax2.set_ylabel("replications")
    ax2.set_title("Final terminal")
    fig.tight_layout()
    path = out_dir / "absorption.png"
    fig.savefig(path, dpi=120)
    plt.close(fig)
    written.append(path)

    return written
