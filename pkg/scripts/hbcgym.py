"""
scripts/hbcgym.py
Command-line entry point for the HBC gym pipeline.

Examples:
    python scripts/hbcgym.py synth --subjects 4 --days 2 --seed 7 --out data/synthetic
    python scripts/hbcgym.py ingest --data data/synthetic
    python scripts/hbcgym.py train-eval --data data/synthetic --position wrist --source hbc imu combined
    python scripts/hbcgym.py count --data data/synthetic --grid-mode louo
    python scripts/hbcgym.py auth --data data/synthetic --activity Running
    python scripts/hbcgym.py report results/train-eval results/count
    python scripts/hbcgym.py rerun results/train-eval/run_manifest.json

Exit codes: 0 ok, 2 usage error, 3 data error, 4 invariant breach.
"""

from __future__ import annotations

import argparse
import json
import sys
import warnings
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional

# Add project root to path
sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

import numpy as np  # noqa: E402
import pandas as pd  # noqa: E402
import torch  # noqa: E402

from counting.repetitions import GRID_MODES, CountConfig, evaluate_counting  # noqa: E402
from counting.segments import extract_segments  # noqa: E402
from dataio.dataset_manager import DatasetManager  # noqa: E402
from dataio.sessions import (  # noqa: E402
    WORKOUTS,
    ActivityLabel,
    DataQualityWarning,
    Position,
    SessionParseError,
    SessionSchema,
    CANONICAL_SCHEMA,
)
from dataio.settings import get_data_dir, get_out_dir, get_seed, get_threads  # noqa: E402
from dataio.windows import SignalSource  # noqa: E402
from evaluation.authentication import run_auth  # noqa: E402
from evaluation.louo import LeakageError, run_louo  # noqa: E402
from evaluation.reporting import config_key, write_counting_outputs, write_report  # noqa: E402
from evaluation.training import TrainingDivergedError, TrainSpec  # noqa: E402
from models.config import ModelConfig  # noqa: E402
from nnlib.layers import LayerShapeError  # noqa: E402
from nnlib.optim import LrSchedule, MissingGradientError  # noqa: E402
from synth.generator import generate_dataset  # noqa: E402


EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_INVARIANT = 4

RUN_MANIFEST = "run_manifest.json"
# run arguments that do not change any result file
NON_RESULT_ARGS = ("out", "quiet", "threads")


class UsageError(ValueError):
    pass


# ----------------------------
# Helpers
# ----------------------------

def _banner(title: str) -> None:
    print("=" * 80)
    print(title)
    print("=" * 80)


def _print_warning(message, category, filename, lineno, file=None, line=None):
    print(f"⚠️  {message}")


def _jsonable(value: Any) -> Any:
    if isinstance(value, Path):
        return str(value)
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    return value


def run_record(args: argparse.Namespace) -> Dict[str, Any]:
    """Arguments that determine the results (what report.json carries)."""
    return {
        k: _jsonable(v)
        for k, v in sorted(vars(args).items())
        if k != "handler" and k not in NON_RESULT_ARGS
    }


def write_run_manifest(out_dir: Path, args: argparse.Namespace) -> Path:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    payload = {k: _jsonable(v) for k, v in sorted(vars(args).items()) if k != "handler"}
    path = out_dir / RUN_MANIFEST
    with path.open("w", encoding="utf-8") as f:
        json.dump(payload, f, indent=2, sort_keys=True)
        f.write("\n")
    return path


def _open_dataset(args: argparse.Namespace) -> DatasetManager:
    schema = SessionSchema.from_json(Path(args.schema)) if getattr(args, "schema", None) else CANONICAL_SCHEMA
    return DatasetManager(Path(args.data), schema=schema, verbose=not args.quiet)


def _positions(args: argparse.Namespace, mgr: DatasetManager) -> List[Position]:
    available = mgr.positions()
    if not args.position:
        return available
    requested = [Position(p) for p in args.position]
    missing = [p.value for p in requested if p not in available]
    if missing:
        raise UsageError(f"position(s) {missing} not in dataset {args.data} (has {[p.value for p in available]})")
    return requested


def _train_spec(args: argparse.Namespace) -> TrainSpec:
    if args.epochs < 2:
        raise UsageError(f"--epochs must be >= 2, got {args.epochs}")
    patience = args.patience if args.patience is not None else min(100, args.epochs - 1)
    if not 0 < patience < args.epochs:
        raise UsageError(f"--patience must be in (0, --epochs), got {patience}")
    if args.batch < 1:
        raise UsageError(f"--batch must be >= 1, got {args.batch}")
    return TrainSpec(
        max_epochs=args.epochs,
        early_stop_patience=patience,
        batch_size=args.batch,
        schedule=LrSchedule(initial=args.lr),
        seed=args.seed,
        progress=not args.quiet,
    )


def _fold_printer(quiet: bool) -> Optional[Callable[[Dict[str, Any]], None]]:
    if quiet:
        return None

    def show(rec: Dict[str, Any]) -> None:
        print(
            f"   ✅ fold {rec['fold']}: acc={rec['accuracy']:.4f} F={rec['macro_f1']:.4f} "
            f"(epochs {rec['epochs_run']}, best {rec['best_epoch']}, n_test={rec['n_test']})"
        )

    return show


def _configure_threads(args: argparse.Namespace) -> int:
    threads = args.threads or get_threads()
    torch.set_num_threads(threads)
    return threads


# ----------------------------
# Subcommands
# ----------------------------

def cmd_synth(args: argparse.Namespace) -> int:
    if args.subjects < 2:
        raise UsageError(f"--subjects must be >= 2 (leave-one-user-out needs two), got {args.subjects}")
    if not 1 <= args.days <= 5:
        raise UsageError(f"--days must be in 1..5, got {args.days}")
    if args.noise < 0:
        raise UsageError(f"--noise must be >= 0, got {args.noise}")

    out = Path(args.out)
    _banner(f"🚀 Synthesizing {args.subjects} subjects x {args.days} days -> {out}")
    manifest = generate_dataset(
        out,
        n_subjects=args.subjects,
        n_days=args.days,
        activities=[ActivityLabel(a) for a in args.activities],
        seed=args.seed,
        positions=[Position(p) for p in args.positions],
        noise_level=args.noise,
        threads=args.threads or get_threads(),
        verbose=not args.quiet,
    )
    write_run_manifest(out, args)
    print(f"✅ Manifest: {manifest}")
    return EXIT_OK


def cmd_ingest(args: argparse.Namespace) -> int:
    mgr = _open_dataset(args)
    _banner(f"📁 Dataset {args.data}")
    infos = []
    for position in _positions(args, mgr):
        info = mgr.get_dataset_info(position)
        infos.append(info)
        print(f"\n📊 {position.value}: {info['n_sessions']} sessions, subjects {info['subjects']}, days {info['days']}")
        print(f"   frames: {info['n_frames']} ({info['duration_s'] / 3600:.2f} h)")
        print(f"   counts sidecars: {'✅' if info['has_counts'] else '⚠️  missing'}")
        classes = pd.Series(info["frames_per_class"]).sort_index()
        print("   frames per class:")
        print("\n".join(f"      {k:<14s} {v:>9d}" for k, v in classes.items()))
        windows = mgr.load_windows(position)
        per_class = {lbl.value: n for lbl, n in sorted(windows.class_counts().items(), key=lambda kv: kv[0].index)}
        print(f"   windows: {len(windows)} {per_class}")

    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        with (out / "dataset_info.json").open("w", encoding="utf-8") as f:
            json.dump(infos, f, indent=2, sort_keys=True)
            f.write("\n")
        write_run_manifest(out, args)
    mgr.close()
    print("\n✅ All sessions parsed")
    return EXIT_OK


def cmd_train_eval(args: argparse.Namespace) -> int:
    spec = _train_spec(args)
    threads = _configure_threads(args)
    mgr = _open_dataset(args)
    out = Path(args.out)
    write_run_manifest(out, args)

    reports = {}
    for position in _positions(args, mgr):
        windows = mgr.load_windows(position)
        subjects = sorted(np.unique(windows.subjects).tolist())
        if len(subjects) < 2:
            raise UsageError(f"{position.value}: leave-one-user-out needs >= 2 subjects, got {subjects}")
        for source in args.source:
            cfg = ModelConfig(signal_source=SignalSource(source))
            _banner(f"🚀 LOUO {position.value}/{source}: {len(windows)} windows, subjects {subjects}")
            rep = run_louo(windows, cfg, spec, threads=threads, on_fold=_fold_printer(args.quiet))
            reports[config_key(position.value, source)] = rep
            print(
                f"✅ {position.value}/{source}: accuracy={rep.accuracy:.4f} macro-F={rep.macro_f1:.4f} "
                f"(fold mean {rep.fold_mean_accuracy:.4f} +- {rep.fold_std_accuracy:.4f})"
            )

    report_path = write_report(out, reports, run_record(args), kind="recognition")
    mgr.close()
    print(f"\n✅ Report: {report_path}")
    return EXIT_OK


def cmd_count(args: argparse.Namespace) -> int:
    threads = args.threads or get_threads()
    mgr = _open_dataset(args)
    cfg = CountConfig(per_activity=args.per_activity)

    segments = []
    for position in _positions(args, mgr):
        for entry in mgr.list_sessions(position):
            rec = mgr.load_session(entry)
            if entry.counts_path.exists():
                annotations = mgr.load_counts(entry)
            elif args.default_counts:
                annotations = None
            else:
                raise FileNotFoundError(
                    f"Repetition counts sidecar not found: {entry.counts_path} "
                    f"(use --default-counts to assume 10 repetitions per strength set)"
                )
            segments.extend(extract_segments(rec, annotations))
    if not segments:
        raise SessionParseError(f"no countable exercise segments in {args.data}")

    _banner(f"🚀 Counting {len(segments)} segments (grid mode: {args.grid_mode})")
    evaluation = evaluate_counting(segments, cfg, mode=args.grid_mode, threads=threads)
    rows, summary = evaluation.rows(), evaluation.summary()

    out = Path(args.out)
    write_run_manifest(out, args)
    report_path = write_counting_outputs(out, rows, summary, run_record(args), evaluation.params)

    overall = summary[summary["activity"] == "all"]
    for r in overall.itertuples(index=False):
        print(f"   {r.position:<7s} {r.source:<9s} {r.mean:.3f} +- {r.std:.3f} (n={r.n})")
    mgr.close()
    print(f"\n✅ Report: {report_path}")
    return EXIT_OK


def cmd_auth(args: argparse.Namespace) -> int:
    spec = _train_spec(args)
    _configure_threads(args)
    mgr = _open_dataset(args)
    positions = _positions(args, mgr)
    activity = ActivityLabel(args.activity)
    out = Path(args.out)
    write_run_manifest(out, args)

    reports = {}
    for position in positions:
        windows = mgr.load_windows(position)
        for source in args.source:
            cfg = ModelConfig(signal_source=SignalSource(source))
            _banner(f"🚀 Authentication {position.value}/{source} on {activity.value}")
            rep = run_auth(windows, cfg, spec, activity=activity, on_fold=_fold_printer(args.quiet))
            reports[config_key(position.value, source)] = rep
            print(f"✅ {position.value}/{source}: accuracy={rep.accuracy:.4f} macro-F={rep.macro_f1:.4f}")

    report_path = write_report(out, reports, run_record(args), kind="authentication")
    mgr.close()
    print(f"\n✅ Report: {report_path}")
    return EXIT_OK


def report_table(report: Dict[str, Any]) -> pd.DataFrame:
    """Flatten one report.json into rows (recognition / authentication / counting)."""
    kind = report.get("kind")
    if kind == "counting":
        rows = []
        for key, v in sorted(report["summary"].items()):
            position, activity, source = key.split("/")
            rows.append({"kind": kind, "position": position, "activity": activity, "source": source, **v})
        return pd.DataFrame(rows)
    rows = []
    for key, v in sorted(report["results"].items()):
        rows.append(
            {
                "kind": kind,
                "position": v["position"],
                "source": v["source"],
                "accuracy": v["accuracy"],
                "macro_f1": v["macro_f1"],
                "fold_mean_accuracy": v["fold_mean_accuracy"],
                "fold_std_accuracy": v["fold_std_accuracy"],
                "n": v["n"],
                "seed": report.get("run", {}).get("seed"),
            }
        )
    return pd.DataFrame(rows)


def cmd_report(args: argparse.Namespace) -> int:
    tables = []
    for run_dir in args.runs:
        path = Path(run_dir) / "report.json"
        if not path.exists():
            raise FileNotFoundError(f"report.json not found in {run_dir}")
        table = report_table(json.loads(path.read_text(encoding="utf-8")))
        table.insert(0, "run", str(run_dir))
        tables.append(table)

    for table in tables:
        _banner(f"📊 {table['run'].iloc[0]} ({table['kind'].iloc[0]})")
        view = table.drop(columns=["run", "kind"])
        if table["kind"].iloc[0] == "counting":
            view = view[view["activity"] == "all"]
        print(view.to_string(index=False, float_format=lambda x: f"{x:.3f}"))

    if args.csv:
        merged = pd.concat(tables, ignore_index=True)
        Path(args.csv).parent.mkdir(parents=True, exist_ok=True)
        merged.to_csv(args.csv, index=False, float_format="%.6g", lineterminator="\n")
        print(f"\n✅ Wrote {args.csv}")
    return EXIT_OK


def cmd_rerun(args: argparse.Namespace) -> int:
    path = Path(args.manifest)
    if not path.exists():
        raise FileNotFoundError(f"run manifest not found: {path}")
    recorded = json.loads(path.read_text(encoding="utf-8"))
    command = recorded.get("command")
    if command not in COMMANDS or command == "rerun":
        raise UsageError(f"{path}: cannot re-execute command {command!r}")
    if args.out:
        recorded["out"] = args.out
    replay = argparse.Namespace(**recorded)
    replay.handler = COMMANDS[command]
    print(f"🔁 Re-running {command} from {path}")
    return replay.handler(replay)


COMMANDS: Dict[str, Callable[[argparse.Namespace], int]] = {
    "synth": cmd_synth,
    "ingest": cmd_ingest,
    "train-eval": cmd_train_eval,
    "count": cmd_count,
    "auth": cmd_auth,
    "report": cmd_report,
    "rerun": cmd_rerun,
}


# ----------------------------
# Parser
# ----------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hbcgym", description="HBC + IMU gym workout pipeline")
    sub = parser.add_subparsers(dest="command", required=True)

    positions = [p.value for p in Position]
    sources = [s.value for s in SignalSource]
    workouts = [a.value for a in WORKOUTS]

    def common(p: argparse.ArgumentParser, data: bool = True, out_default: Optional[str] = None):
        if data:
            p.add_argument("--data", type=str, default=str(get_data_dir()), help="Dataset directory")
            p.add_argument("--schema", type=str, default=None, help="JSON column/label mapping for non-canonical files")
            p.add_argument("--position", type=str, nargs="+", choices=positions, default=None,
                           help="Sensor position(s); default: all in the dataset")
        p.add_argument("--seed", type=int, default=get_seed())
        p.add_argument("--out", type=str, default=out_default, help="Output directory")
        p.add_argument("--threads", type=int, default=None, help="Parallel workers (default WS_THREADS)")
        p.add_argument("--quiet", action="store_true", help="No progress bars or per-fold lines")

    def training(p: argparse.ArgumentParser):
        p.add_argument("--epochs", type=int, default=1000, help="Max epochs per fold")
        p.add_argument("--patience", type=int, default=None, help="Early stopping patience (default min(100, epochs-1))")
        p.add_argument("--batch", type=int, default=256, help="Batch size")
        p.add_argument("--lr", type=float, default=1e-4, help="Initial learning rate")

    p = sub.add_parser("synth", help="Generate a synthetic dataset")
    common(p, data=False, out_default=str(get_data_dir()))
    p.add_argument("--subjects", type=int, default=10)
    p.add_argument("--days", type=int, default=5)
    p.add_argument("--activities", type=str, nargs="+", choices=workouts, default=workouts)
    p.add_argument("--positions", type=str, nargs="+", choices=positions, default=positions)
    p.add_argument("--noise", type=float, default=0.05, help="Noise std relative to each step's signal std")

    p = sub.add_parser("ingest", help="Validate a dataset and print per-session / per-class summaries")
    common(p)

    p = sub.add_parser("train-eval", help="Leave-one-user-out activity recognition")
    common(p, out_default=str(get_out_dir() / "train-eval"))
    training(p)
    p.add_argument("--source", type=str, nargs="+", choices=sources, default=[SignalSource.COMBINED.value])

    p = sub.add_parser("count", help="Repetition counting with grid-searched peak parameters")
    common(p, out_default=str(get_out_dir() / "count"))
    p.add_argument("--grid-mode", dest="grid_mode", type=str, choices=GRID_MODES, default="upper-bound")
    p.add_argument("--per-activity", dest="per_activity", action="store_true",
                   help="Search peak parameters per activity instead of per position")
    p.add_argument("--default-counts", dest="default_counts", action="store_true",
                   help="Sessions without a counts sidecar: 10 repetitions per strength set")

    p = sub.add_parser("auth", help="Day-held-out user authentication")
    common(p, out_default=str(get_out_dir() / "auth"))
    training(p)
    p.add_argument("--source", type=str, nargs="+", choices=sources, default=[SignalSource.COMBINED.value])
    p.add_argument("--activity", type=str, choices=workouts, default=ActivityLabel.RUNNING.value)

    p = sub.add_parser("report", help="Print (and merge) result tables")
    p.add_argument("runs", type=str, nargs="+", help="Result directories holding report.json")
    p.add_argument("--csv", type=str, default=None, help="Write the merged table here")

    p = sub.add_parser("rerun", help="Re-execute a run_manifest.json")
    p.add_argument("manifest", type=str)
    p.add_argument("--out", type=str, default=None, help="Write results elsewhere")

    return parser


def run(args: argparse.Namespace) -> int:
    """Dispatch with data-quality warnings shown as ⚠️ lines and errors mapped to exit codes."""
    with warnings.catch_warnings():
        warnings.simplefilter("always", DataQualityWarning)
        warnings.showwarning = _print_warning
        try:
            return args.handler(args)
        except UsageError as e:
            print(f"❌ Usage error: {e}")
            return EXIT_USAGE
        except (LeakageError, TrainingDivergedError, LayerShapeError, MissingGradientError) as e:
            print(f"❌ Invariant breach: {e}")
            return EXIT_INVARIANT
        except (FileNotFoundError, SessionParseError, json.JSONDecodeError) as e:
            print(f"❌ Data error: {e}")
            return EXIT_DATA
        except ValueError as e:
            print(f"❌ Data error: {e}")
            return EXIT_DATA


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    args.handler = COMMANDS[args.command]
    return run(args)


if __name__ == "__main__":
    raise SystemExit(main())
