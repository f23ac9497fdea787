"""Figures for the fee report."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from .fees import FeeTable  # noqa: E402

STYLE = {
    "font.family": "sans-serif",
    "font.size": 10,
    "axes.labelsize": 10,
    "axes.titlesize": 11,
    "xtick.labelsize": 9,
    "ytick.labelsize": 9,
    "legend.fontsize": 8,
    "legend.frameon": False,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "figure.figsize": (6.4, 4.0),
    "savefig.dpi": 150,
    "svg.hashsalt": "tracechain",
}

# stable colours per operation so reruns draw identical charts
OP_COLORS = {
    "register_product": "#4C72B0",
    "deploy:VC": "#DD8452",
    "ship": "#55A868",
    "receive": "#C44E52",
}


def fee_chart(table: FeeTable, path: str | Path, include_admin: bool = False) -> Path:
    """Stacked bar chart of USD fees per party, one segment per operation."""
    path = Path(path)
    parties = [t.party for t in table.totals
               if include_admin or t.role != "administrator"]
    ops = sorted({r.operation for r in table.rows if r.party in parties},
                 key=lambda op: (op not in OP_COLORS, list(OP_COLORS).index(op)
                                 if op in OP_COLORS else 0, op))
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        bottom = [0.0] * len(parties)
        for op in ops:
            heights = []
            for party in parties:
                heights.append(sum(r.usd for r in table.rows
                                   if r.party == party and r.operation == op))
            ax.bar(parties, heights, bottom=bottom, label=op, color=OP_COLORS.get(op),
                   edgecolor="white", linewidth=0.5)
            bottom = [b + h for b, h in zip(bottom, heights)]
        for x, total in enumerate(bottom):
            ax.annotate(f"{total:.2f}", (x, total), ha="center", va="bottom",
                        xytext=(0, 2), textcoords="offset points", fontsize=8)
        ax.set_ylabel("transaction fee [USD]")
        ax.set_xlabel("party")
        ax.set_title(f"Fee per party at {table.usd_per_gas:g} USD/gas")
        ax.legend(loc="upper right")
        fig.tight_layout()
        metadata = {"Software": None} if path.suffix == ".png" else None
        fig.savefig(path, metadata=metadata)
        plt.close(fig)
    return path
