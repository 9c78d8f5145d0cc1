"""
scripts/plots/plot_results.py

Read the result files of a hbcgym run directory and generate plots into docs/figures/.

Understood inputs (any subset may be present):
  - report.json        kind recognition / authentication / counting
  - folds.jsonl        one record per fold: position, source, fold, accuracy, macro_f1, epochs_run, best_epoch
  - counting_rows.csv  long format: session, subject_id, position, activity, source, detected, true_count, accuracy

Output:
  - PNG files into docs/figures/ with consistent filenames.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import pandas as pd  # noqa: E402

sys.path.insert(0, str(Path(__file__).resolve().parents[2]))

from counting.repetitions import REPORT_SOURCES  # noqa: E402
from evaluation.reporting import folds_to_frame  # noqa: E402


# --------------------------
# Helpers
# --------------------------

def _ensure_dir(path: Path) -> None:
    path.mkdir(parents=True, exist_ok=True)


def _as_num_series(df: pd.DataFrame, col: str) -> pd.Series:
    if col not in df.columns:
        return pd.Series([pd.NA] * len(df), index=df.index)
    return pd.to_numeric(df[col], errors="coerce")


def _savefig(out_path: Path) -> None:
    plt.tight_layout()
    plt.savefig(out_path, dpi=200)
    plt.close()


def _bar_plot_multi(df: pd.DataFrame, title: str, ylabel: str, xlabel: str, out_path: Path) -> None:
    """Expects df indexed by the x categories with one column per bar group."""
    plt.figure()
    ax = df.sort_index().plot(kind="bar", ax=plt.gca())
    ax.set_ylim(0.0, 1.05)
    plt.title(title)
    plt.ylabel(ylabel)
    plt.xlabel(xlabel)
    plt.xticks(rotation=30, ha="right")
    plt.legend(fontsize=8)
    _savefig(out_path)


# --------------------------
# Tables
# --------------------------

def results_frame(report: dict) -> pd.DataFrame:
    """One row per position/source of a recognition or authentication report."""
    rows = [
        {"position": v["position"], "source": v["source"], "accuracy": v["accuracy"], "macro_f1": v["macro_f1"]}
        for _, v in sorted(report.get("results", {}).items())
    ]
    return pd.DataFrame(rows)


def counting_means(rows: pd.DataFrame) -> pd.DataFrame:
    """Mean accuracy, activities as index and sources as columns."""
    rows = rows.assign(accuracy=_as_num_series(rows, "accuracy"))
    table = rows.pivot_table(index="activity", columns="source", values="accuracy", aggfunc="mean")
    return table[[s for s in REPORT_SOURCES if s in table.columns]]


# --------------------------
# Plotting
# --------------------------

def make_plots(run_dir: Path, out_dir: Path, tag: str) -> int:
    """Returns the number of figures written."""
    _ensure_dir(out_dir)
    written = 0

    report_path = run_dir / "report.json"
    report = json.loads(report_path.read_text(encoding="utf-8")) if report_path.exists() else {}
    kind = report.get("kind", "")

    if kind in ("recognition", "authentication"):
        res = results_frame(report)
        if not res.empty:
            acc = res.pivot(index="position", columns="source", values="accuracy")
            _bar_plot_multi(acc, f"{kind}: accuracy ({tag})", "accuracy", "position", out_dir / f"{tag}__{kind}__accuracy.png")
            f1 = res.pivot(index="position", columns="source", values="macro_f1")
            _bar_plot_multi(f1, f"{kind}: macro F ({tag})", "macro F", "position", out_dir / f"{tag}__{kind}__macro_f1.png")
            written += 2

    folds_path = run_dir / "folds.jsonl"
    if folds_path.exists():
        folds = folds_to_frame(folds_path)
        if not folds.empty:
            folds["config"] = folds["position"] + "/" + folds["source"]
            per_fold = folds.pivot_table(index="fold", columns="config", values="accuracy", aggfunc="mean")
            _bar_plot_multi(per_fold, f"per-fold accuracy ({tag})", "accuracy", "held-out fold", out_dir / f"{tag}__folds__accuracy.png")
            written += 1

    rows_path = run_dir / "counting_rows.csv"
    if rows_path.exists():
        rows = pd.read_csv(rows_path)
        for position, g in rows.groupby("position"):
            means = counting_means(g)
            _bar_plot_multi(
                means,
                f"counting accuracy, {position} ({tag})",
                "mean accuracy",
                "activity",
                out_dir / f"{tag}__counting__{position}.png",
            )
            written += 1

    return written


def main() -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("--run", type=str, required=True, help="Result directory of a hbcgym subcommand.")
    parser.add_argument("--out_dir", type=str, default="docs/figures", help="Output directory for plots.")
    parser.add_argument("--tag", type=str, default=None, help="Filename tag (default: run directory name).")
    args = parser.parse_args()

    run_dir = Path(args.run)
    if not run_dir.is_dir():
        print(f"❌ Run directory not found: {run_dir}")
        return 1

    out_dir = Path(args.out_dir)
    n = make_plots(run_dir, out_dir=out_dir, tag=args.tag or run_dir.name)
    if n == 0:
        print(f"❌ No report.json, folds.jsonl or counting_rows.csv in {run_dir}")
        return 1

    print(f"✅ {n} plots saved to: {out_dir.resolve()}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
