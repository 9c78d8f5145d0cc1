# evaluation/reporting.py
"""
Result files for recognition, authentication and counting runs.

Outputs (all deterministic for identical inputs):
  - report.json                       every metric, full float precision
  - confusion_<position>_<source>.csv row-normalized confusion (6 significant digits)
  - confusion_<position>_<source>.svg heatmap
  - folds.jsonl                       one record per fold
  - counting_rows.csv / counting_summary.csv / counting_boxplot.svg
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Optional

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
import pandas as pd  # noqa: E402

from evaluation.metrics import EvalReport  # noqa: E402


FLOAT_FORMAT = "%.6g"
SVG_HASH_SALT = "hbcgym"

# Reproducible SVG output: fixed element ids, no creation date
plt.rcParams["svg.hashsalt"] = SVG_HASH_SALT


# --------------------------
# Helpers
# --------------------------

def _ensure_dir(path: Path) -> None:
    path.mkdir(parents=True, exist_ok=True)


def _savefig(fig, out_path: Path) -> None:
    fig.tight_layout()
    fig.savefig(out_path, format="svg", metadata={"Date": None})
    plt.close(fig)


def _dump_json(obj: Any, path: Path) -> None:
    with path.open("w", encoding="utf-8") as f:
        json.dump(obj, f, indent=2, sort_keys=True)
        f.write("\n")


def config_key(position: str, source: str) -> str:
    return f"{position}/{source}"


# --------------------------
# Recognition / authentication
# --------------------------

def confusion_frame(report: EvalReport) -> pd.DataFrame:
    return pd.DataFrame(report.confusion, index=report.class_names, columns=report.class_names)


def write_confusion_csv(report: EvalReport, out_path: Path) -> Path:
    df = confusion_frame(report)
    df.index.name = "true\\pred"
    df.to_csv(out_path, float_format=FLOAT_FORMAT, lineterminator="\n")
    return out_path


def plot_confusion_svg(report: EvalReport, out_path: Path, title: str = "") -> Path:
    cm = report.confusion
    k = len(report.class_names)
    fig, ax = plt.subplots(figsize=(0.6 * k + 2.5, 0.6 * k + 2.0))
    im = ax.imshow(cm, cmap="Blues", vmin=0.0, vmax=1.0)
    ax.set_xticks(range(k))
    ax.set_yticks(range(k))
    ax.set_xticklabels(report.class_names, rotation=60, ha="right", fontsize=8)
    ax.set_yticklabels(report.class_names, fontsize=8)
    ax.set_xlabel("predicted")
    ax.set_ylabel("true")
    for i in range(k):
        for j in range(k):
            if cm[i, j] >= 0.005:
                ax.text(
                    j, i, f"{cm[i, j]:.2f}",
                    ha="center", va="center", fontsize=6,
                    color="white" if cm[i, j] > 0.6 else "black",
                )
    if title:
        ax.set_title(f"{title}  acc={report.accuracy:.3f}  F={report.macro_f1:.3f}", fontsize=9)
    fig.colorbar(im, ax=ax, fraction=0.046, pad=0.04)
    _savefig(fig, out_path)
    return out_path


def write_folds_jsonl(records: Iterable[Mapping[str, Any]], out_path: Path, extra: Optional[dict] = None) -> Path:
    with out_path.open("a", encoding="utf-8") as f:
        for rec in records:
            row = {**(extra or {}), **rec}
            f.write(json.dumps(row, sort_keys=True) + "\n")
    return out_path


def folds_to_frame(path: Path) -> pd.DataFrame:
    rows = [json.loads(ln) for ln in Path(path).read_text(encoding="utf-8").splitlines() if ln.strip()]
    return pd.DataFrame(rows)


def recognition_summary(reports: Mapping[str, EvalReport]) -> pd.DataFrame:
    """One row per position, one "F-score / accuracy" cell per source."""
    rows: Dict[str, Dict[str, str]] = {}
    for key, rep in sorted(reports.items()):
        position, source = key.split("/", 1)
        rows.setdefault(position, {})[source] = f"{rep.macro_f1:.3f} / {rep.accuracy:.3f}"
    return pd.DataFrame.from_dict(rows, orient="index").sort_index()


def write_report(
    out_dir: Path,
    reports: Mapping[str, EvalReport],
    run: Mapping[str, Any],
    kind: str = "recognition",
) -> Path:
    """
    Write report.json plus per-configuration confusion CSV / SVG and folds.jsonl.
    `reports` is keyed by "<position>/<source>".
    """
    out_dir = Path(out_dir)
    _ensure_dir(out_dir)
    folds_path = out_dir / "folds.jsonl"
    if folds_path.exists():
        folds_path.unlink()

    entries = {}
    for key in sorted(reports):
        rep = reports[key]
        position, source = key.split("/", 1)
        stem = f"{position}_{source}"
        write_confusion_csv(rep, out_dir / f"confusion_{stem}.csv")
        plot_confusion_svg(rep, out_dir / f"confusion_{stem}.svg", title=f"{kind} {position} {source}")
        write_folds_jsonl(rep.folds, folds_path, extra={"position": position, "source": source})
        entries[key] = {"position": position, "source": source, **rep.to_dict()}

    if len(reports) > 1 or kind == "recognition":
        summary = recognition_summary(reports)
        summary.to_csv(out_dir / f"{kind}_summary.csv", lineterminator="\n")

    report_path = out_dir / "report.json"
    _dump_json({"kind": kind, "run": dict(run), "results": entries}, report_path)
    return report_path


# --------------------------
# Counting
# --------------------------

def plot_counting_boxplot(rows: pd.DataFrame, out_path: Path) -> Path:
    """Accuracy distribution per activity, one box per source."""
    sources = [s for s in ("acc", "gyro", "hbc", "imu", "combined") if s in set(rows["source"])]
    activities = sorted(rows["activity"].unique())
    fig, ax = plt.subplots(figsize=(max(6.0, 1.4 * len(activities) * len(sources) / 3), 4.0))
    width = 0.8 / max(1, len(sources))
    for si, src in enumerate(sources):
        data = [rows[(rows.activity == a) & (rows.source == src)]["accuracy"].to_numpy() for a in activities]
        pos = np.arange(len(activities)) + (si - (len(sources) - 1) / 2) * width
        bp = ax.boxplot(data, positions=pos, widths=width * 0.9, patch_artist=True, showfliers=False)
        for patch in bp["boxes"]:
            patch.set_facecolor(f"C{si}")
        ax.plot([], [], color=f"C{si}", linewidth=6, label=src)
    ax.set_xticks(range(len(activities)))
    ax.set_xticklabels(activities, rotation=30, ha="right")
    ax.set_ylabel("counting accuracy")
    ax.legend(fontsize=8, ncol=len(sources))
    _savefig(fig, out_path)
    return out_path


def write_counting_outputs(out_dir: Path, rows: pd.DataFrame, summary: pd.DataFrame, run: Mapping[str, Any], params: Mapping[str, Any]) -> Path:
    out_dir = Path(out_dir)
    _ensure_dir(out_dir)
    rows.to_csv(out_dir / "counting_rows.csv", index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    summary.to_csv(out_dir / "counting_summary.csv", index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    plot_counting_boxplot(rows, out_dir / "counting_boxplot.svg")

    table = {
        f"{r.position}/{r.activity}/{r.source}": {"n": int(r.n), "mean": float(r.mean), "std": float(r.std)}
        for r in summary.itertuples(index=False)
    }
    report_path = out_dir / "report.json"
    _dump_json({"kind": "counting", "run": dict(run), "params": params, "summary": table}, report_path)
    return report_path
