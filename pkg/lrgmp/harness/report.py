# lrgmp - Result aggregation and tables
# AGPL-3.0-or-later
#
# Groups result rows by (method, dataset, r, placement, shots, noise) and
# reports mean and population std (ddof=0) of validation / test accuracy.

import logging
from pathlib import Path

import pandas as pd

from lrgmp.config import RESULT_COLUMNS, SWEEP_GROUP_COLUMNS

log = logging.getLogger(__name__)

_DTYPES = {
    "method": str, "dataset": str, "seed": "int64", "r": "int64", "placement": str,
    "shots": "int64", "noise": str, "val_acc": "float64", "test_acc": "float64",
    "epochs_to_best": "int64", "wall_time_ms": "int64",
}
SUMMARY_COLUMNS = (*SWEEP_GROUP_COLUMNS, "n", "val_mean", "val_std", "test_mean", "test_std")


def empty_results() -> pd.DataFrame:
    return pd.DataFrame({c: pd.Series(dtype=_DTYPES[c]) for c in RESULT_COLUMNS})


def read_results(path) -> pd.DataFrame:
    """Results CSV (schema tag line skipped) as a frame; an empty file gives no rows."""
    try:
        frame = pd.read_csv(Path(path), comment="#", dtype=_DTYPES, keep_default_na=False)
    except pd.errors.EmptyDataError:
        return empty_results()
    return frame


def records_frame(rows) -> pd.DataFrame:
    """Frame from ResultRow objects, typed like read_results()."""
    frame = pd.DataFrame([r.as_record() for r in rows], columns=list(RESULT_COLUMNS))
    return frame.astype(_DTYPES) if len(frame) else empty_results()


def aggregate_results(frame: pd.DataFrame) -> pd.DataFrame:
    """One row per group, sorted by the group columns."""
    if frame.empty:
        return pd.DataFrame(columns=list(SUMMARY_COLUMNS))
    grouped = frame.groupby(list(SWEEP_GROUP_COLUMNS), sort=True)
    summary = grouped.agg(
        n=("seed", "size"),
        val_mean=("val_acc", "mean"),
        val_std=("val_acc", lambda s: s.std(ddof=0)),
        test_mean=("test_acc", "mean"),
        test_std=("test_acc", lambda s: s.std(ddof=0)),
    ).reset_index()
    return summary[list(SUMMARY_COLUMNS)]


def format_markdown(summary: pd.DataFrame) -> str:
    head = [*SWEEP_GROUP_COLUMNS, "n", "val_acc", "test_acc"]
    lines = ["| " + " | ".join(head) + " |", "|" + "---|" * len(head)]
    for row in summary.itertuples(index=False):
        cells = [str(getattr(row, c)) for c in SWEEP_GROUP_COLUMNS]
        cells += [
            str(row.n),
            f"{row.val_mean:.4f} ± {row.val_std:.4f}",
            f"{row.test_mean:.4f} ± {row.test_std:.4f}",
        ]
        lines.append("| " + " | ".join(cells) + " |")
    return "\n".join(lines) + "\n"


def format_csv(summary: pd.DataFrame) -> str:
    return summary.to_csv(index=False, float_format="%.6f", lineterminator="\n")


def plot_summary(summary: pd.DataFrame, path) -> Path:
    """Bar chart of test accuracy mean ± std per group."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    labels = [
        f"{row.method}\nr={row.r} {row.placement}\n{row.shots}-shot {row.noise}"
        for row in summary.itertuples(index=False)
    ]
    fig, ax = plt.subplots(figsize=(max(4.0, 1.2 * len(labels)), 4.0))
    ax.bar(range(len(labels)), summary["test_mean"], yerr=summary["test_std"], capsize=3, color="#4c72b0")
    ax.set_xticks(range(len(labels)))
    ax.set_xticklabels(labels, fontsize=7)
    ax.set_ylim(0.0, 1.0)
    ax.set_ylabel("test accuracy")
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=120)
    plt.close(fig)
    log.info("wrote plot %s", path)
    return path
