"""
scripts/run_seed_sweep.py
Re-run leave-one-user-out recognition under several seeds and report the
accuracy deviation per (position, source).

    python scripts/run_seed_sweep.py --data data/synthetic --seeds 0 1 2 --epochs 200
"""

import argparse
import json
import subprocess
import sys
from pathlib import Path

import pandas as pd

sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

from dataio.settings import get_data_dir, get_out_dir  # noqa: E402


CLI = Path(__file__).resolve().parent / "hbcgym.py"


def sweep_table(run_dirs):
    """One row per (seed, position, source) from each run's report.json."""
    rows = []
    for seed, run_dir in run_dirs:
        report = json.loads((run_dir / "report.json").read_text(encoding="utf-8"))
        for key, res in sorted(report["results"].items()):
            rows.append(
                {
                    "seed": seed,
                    "position": res["position"],
                    "source": res["source"],
                    "accuracy": res["accuracy"],
                    "macro_f1": res["macro_f1"],
                }
            )
    return pd.DataFrame(rows)


def deviation_table(table: pd.DataFrame) -> pd.DataFrame:
    """Max - min accuracy across seeds, in percentage points."""
    g = table.groupby(["position", "source"])["accuracy"]
    out = g.agg(["mean", "min", "max"]).reset_index()
    out["deviation_pts"] = (out["max"] - out["min"]) * 100.0
    return out


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--data", type=str, default=str(get_data_dir()))
    parser.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2])
    parser.add_argument("--position", type=str, nargs="+", default=None)
    parser.add_argument("--source", type=str, nargs="+", default=["combined"])
    parser.add_argument("--epochs", type=int, default=1000)
    parser.add_argument("--batch", type=int, default=256)
    parser.add_argument("--out", type=str, default=str(get_out_dir() / "seed-sweep"))
    args = parser.parse_args()

    out_root = Path(args.out)
    print("🚀 Starting seed sweep...")
    print(f"Seeds to run: {', '.join(map(str, args.seeds))}")
    print("=" * 80)

    done = []
    for seed in args.seeds:
        run_dir = out_root / f"seed{seed}"
        cmd = [
            sys.executable, str(CLI), "train-eval",
            "--data", args.data,
            "--seed", str(seed),
            "--epochs", str(args.epochs),
            "--batch", str(args.batch),
            "--out", str(run_dir),
            "--quiet",
            "--source", *args.source,
        ]
        if args.position:
            cmd += ["--position", *args.position]

        print(f"\n▶️ Running seed {seed}")
        try:
            subprocess.run(cmd, check=True)
            print(f"✅ Finished seed {seed}")
            done.append((seed, run_dir))
        except subprocess.CalledProcessError as e:
            print(f"❌ Seed {seed} failed. Exit code: {e.returncode}")

    if len(done) < 2:
        print("\n❌ Need at least two successful seeds to measure deviation")
        return 1

    table = sweep_table(done)
    dev = deviation_table(table)
    out_root.mkdir(parents=True, exist_ok=True)
    table.to_csv(out_root / "seed_runs.csv", index=False, float_format="%.6g", lineterminator="\n")
    dev.to_csv(out_root / "seed_deviation.csv", index=False, float_format="%.6g", lineterminator="\n")

    print("\n" + "=" * 80)
    print(dev.to_string(index=False, float_format=lambda x: f"{x:.3f}"))
    print(f"\n🎉 Sweep complete! Tables in {out_root}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
