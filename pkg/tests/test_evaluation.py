import json

import numpy as np
import pandas as pd
import pytest
import torch

from dataio.dataset_manager import DatasetManager
from dataio.sessions import ACTIVITY_LABELS, ActivityLabel, Position
from dataio.windows import Fold, SignalSource, WindowSet, make_louo_folds
from evaluation.authentication import run_auth
from evaluation.louo import LeakageError, assert_no_leakage, run_louo, scan_leakage
from evaluation.metrics import compute_metrics
from evaluation.reporting import write_counting_outputs, write_report
from evaluation.training import EarlyStopping, TrainSpec, fit, train_fold, validation_split
from models.config import ModelConfig
from models.hybrid_model import build_model
from nnlib.optim import LrSchedule
from synth.generator import generate_dataset


def _window_set(subjects, sessions=None, n_per=4, channels=7) -> WindowSet:
    subjects = np.repeat(np.asarray(subjects, dtype=np.int64), n_per)
    n = len(subjects)
    if sessions is None:
        sessions = np.array([f"S{s}_D1_wrist" for s in subjects], dtype=object)
    return WindowSet(
        X=np.zeros((n, channels, 80), dtype=np.float32),
        labels=np.full(n, ActivityLabel.NULL.index),
        subjects=subjects,
        days=np.ones(n, dtype=np.int64),
        sessions=np.asarray(sessions, dtype=object),
        starts=np.arange(n) * 40,
    )


class TestMetrics:
    def test_accuracy_and_macro_f(self):
        rep = compute_metrics([0, 0, 1, 1, 2], [0, 1, 1, 1, 2], ["a", "b", "c"])
        assert rep.n == 5
        assert rep.accuracy == pytest.approx(0.8)
        assert rep.f1 == pytest.approx({"a": 2 / 3, "b": 0.8, "c": 1.0})
        assert rep.macro_f1 == pytest.approx((2 / 3 + 0.8 + 1.0) / 3)
        np.testing.assert_array_equal(rep.confusion_counts, [[1, 0, 0], [1, 2, 0], [0, 0, 1]])
        np.testing.assert_allclose(rep.confusion[1], [1 / 3, 2 / 3, 0.0])

    def test_macro_f_over_present_classes_only(self):
        rep = compute_metrics([0, 3], [0, 0], ["a", "b", "c", "d"])
        assert set(rep.f1) == {"a"}
        assert rep.macro_f1 == pytest.approx(2 / 3)
        np.testing.assert_array_equal(rep.confusion[3], 0.0)

    def test_fold_statistics(self):
        rep = compute_metrics([1, 1], [1, 1], ["a", "b"])
        assert rep.fold_mean_accuracy is None
        rep.folds = [{"accuracy": 0.5, "macro_f1": 0.4}, {"accuracy": 0.9, "macro_f1": 0.8}]
        assert rep.fold_mean_accuracy == pytest.approx(0.7)
        assert rep.fold_std_accuracy == pytest.approx(0.2)

    @pytest.mark.parametrize("preds,labels", [([0, 1], [0]), ([], []), ([0, 5], [0, 1])])
    def test_invalid_inputs(self, preds, labels):
        with pytest.raises(ValueError):
            compute_metrics(preds, labels, ["a", "b"])


class TestLeakage:
    def test_clean_plan_passes(self):
        ws = _window_set([1, 2, 3])
        assert scan_leakage(ws, make_louo_folds(ws)) == 3

    def test_test_subject_in_training_set(self):
        ws = _window_set([1, 2, 3])
        bad = Fold(train_subjects=frozenset({1, 2, 3}), test_subject=1)
        tr = np.flatnonzero(ws.subjects != 0)
        te = np.flatnonzero(ws.subjects == 1)
        with pytest.raises(LeakageError, match="test subject"):
            assert_no_leakage(ws, bad, tr, te)

    def test_shared_session_detected(self):
        sessions = ["S1_D1_wrist"] * 4 + ["S2_D1_wrist"] * 3 + ["S1_D1_wrist"]
        ws = _window_set([1, 2], sessions=sessions)
        with pytest.raises(LeakageError, match="sessions"):
            scan_leakage(ws, make_louo_folds(ws))


class TestTrainingPieces:
    def test_early_stopping_needs_strict_improvement(self):
        model = torch.nn.Linear(2, 2)
        stop = EarlyStopping(patience=3)
        decisions = [stop.update(e, loss, model) for e, loss in enumerate([1.0, 0.9, 0.9, 0.95, 0.91])]
        assert decisions == [False, False, False, False, True]
        assert stop.best_epoch == 1

    def test_early_stopping_restores_best_weights(self):
        model = torch.nn.Linear(2, 2)
        stop = EarlyStopping(patience=2)
        stop.update(0, 0.5, model)
        best = {k: v.clone() for k, v in model.state_dict().items()}
        with torch.no_grad():
            model.weight.add_(1.0)
        stop.update(1, 0.7, model)
        stop.restore(model)
        for k, v in model.state_dict().items():
            assert torch.equal(v, best[k])

    def test_window_validation_split(self):
        tr, val = validation_split(100, None, TrainSpec(max_epochs=5, early_stop_patience=2), "window")
        assert len(val) == 10 and len(tr) == 90
        assert not set(tr) & set(val)

    def test_subject_validation_split_holds_out_whole_subjects(self):
        groups = np.repeat(np.arange(1, 6), 10)
        tr, val = validation_split(50, groups, TrainSpec(max_epochs=5, early_stop_patience=2), "auto")
        assert len(np.unique(groups[val])) == 1
        assert not set(groups[tr]) & set(groups[val])

    def test_train_spec_validation(self):
        with pytest.raises(ValueError):
            TrainSpec(max_epochs=10, early_stop_patience=10)
        with pytest.raises(ValueError):
            TrainSpec(val_strategy="random")


class TestFit:
    @staticmethod
    def _toy(seed: int = 0):
        rng = np.random.default_rng(seed)
        quiet = rng.normal(0.0, 0.3, (24, 1, 80))
        moving = 3.0 + np.sin(np.linspace(0, 8 * np.pi, 80)) + rng.normal(0.0, 0.3, (24, 1, 80))
        X = np.concatenate([quiet, moving]).astype(np.float64)
        y = np.array([ActivityLabel.NULL.index] * 24 + [ActivityLabel.RUNNING.index] * 24)
        return X, y

    def _spec(self, **kw):
        base = dict(
            max_epochs=40,
            early_stop_patience=39,
            batch_size=16,
            schedule=LrSchedule(initial=1e-3),
            val_strategy="none",
            dtype="float64",
            progress=False,
        )
        base.update(kw)
        return TrainSpec(**base)

    def test_fit_separates_two_classes(self):
        X, y = self._toy()
        torch.manual_seed(0)
        trained = fit(build_model(ModelConfig(signal_source="hbc")), X, y, self._spec())
        assert trained.history[-1]["train_loss"] < trained.history[0]["train_loss"]
        assert np.mean(trained.predict(X) == y) >= 0.9

    def test_fit_is_deterministic(self):
        X, y = self._toy()
        runs = []
        for _ in range(2):
            torch.manual_seed(0)
            trained = fit(build_model(ModelConfig(signal_source="hbc")), X, y, self._spec(max_epochs=3, early_stop_patience=2))
            runs.append([h["train_loss"] for h in trained.history])
        assert runs[0] == pytest.approx(runs[1], rel=1e-12)

    def test_fit_needs_two_classes(self):
        X, y = self._toy()
        with pytest.raises(ValueError, match="2 classes"):
            fit(build_model(ModelConfig(signal_source="hbc")), X[:24], y[:24], self._spec())

    @staticmethod
    def _imbalanced(seed: int, n_major: int = 90, n_minor: int = 10):
        rng = np.random.default_rng(seed)
        wave = np.sin(np.linspace(0, 8 * np.pi, 80))
        major = 1.0 * wave + rng.normal(0.0, 1.0, (n_major, 1, 80))
        minor = 1.6 * wave + rng.normal(0.0, 1.0, (n_minor, 1, 80))
        X = np.concatenate([major, minor])
        y = np.array([ActivityLabel.NULL.index] * n_major + [ActivityLabel.SQUAT.index] * n_minor)
        return X, y

    def test_class_weighting_lifts_minority_recall(self):
        recall = {True: [], False: []}
        for seed in range(5):
            X, y = self._imbalanced(seed)
            X_test, y_test = self._imbalanced(seed + 100, 90, 90)
            minority = y_test == ActivityLabel.SQUAT.index
            for weighted in (True, False):
                torch.manual_seed(seed)
                spec = self._spec(max_epochs=15, early_stop_patience=14, seed=seed, use_sample_weights=weighted)
                trained = fit(build_model(ModelConfig(signal_source="hbc")), X, y, spec)
                recall[weighted].append(np.mean(trained.predict(X_test[minority]) == ActivityLabel.SQUAT.index))
        assert np.mean(recall[True]) >= np.mean(recall[False])


class TestReporting:
    def _report(self):
        names = [a.value for a in ACTIVITY_LABELS]
        rep = compute_metrics([7, 7, 11, 8], [7, 11, 11, 8], names)
        rep.folds = [{"fold": "S1", "accuracy": 0.5, "macro_f1": 0.5}, {"fold": "S2", "accuracy": 1.0, "macro_f1": 1.0}]
        return rep

    def test_report_files(self, tmp_path):
        path = write_report(tmp_path, {"wrist/hbc": self._report()}, {"command": "train-eval", "seed": 0})
        report = json.loads(path.read_text())
        assert report["kind"] == "recognition"
        assert report["results"]["wrist/hbc"]["accuracy"] == pytest.approx(0.75)
        assert (tmp_path / "confusion_wrist_hbc.csv").exists()
        assert (tmp_path / "confusion_wrist_hbc.svg").exists()
        assert (tmp_path / "recognition_summary.csv").exists()
        folds = (tmp_path / "folds.jsonl").read_text().splitlines()
        assert [json.loads(ln)["fold"] for ln in folds] == ["S1", "S2"]

    def test_report_is_byte_identical(self, tmp_path):
        for name in ("a", "b"):
            write_report(tmp_path / name, {"wrist/hbc": self._report()}, {"seed": 0})
        for fname in ("report.json", "confusion_wrist_hbc.csv", "confusion_wrist_hbc.svg", "folds.jsonl"):
            assert (tmp_path / "a" / fname).read_bytes() == (tmp_path / "b" / fname).read_bytes(), fname

    def test_counting_outputs(self, tmp_path):
        rows = pd.DataFrame(
            [
                {"position": "wrist", "activity": "Squat", "source": s, "accuracy": a}
                for s, a in [("acc", 0.9), ("gyro", 1.0), ("hbc", 0.8), ("imu", 0.95), ("combined", 0.95)]
            ]
        )
        summary = pd.DataFrame(
            [{"position": "wrist", "activity": "all", "source": "acc", "n": 1, "mean": 0.9, "std": 0.0}]
        )
        path = write_counting_outputs(tmp_path, rows, summary, {"grid_mode": "upper-bound"}, {"all": {}})
        report = json.loads(path.read_text())
        assert report["kind"] == "counting"
        assert report["summary"]["wrist/all/acc"] == {"n": 1, "mean": 0.9, "std": 0.0}
        assert (tmp_path / "counting_boxplot.svg").exists()


@pytest.mark.slow
class TestEndToEnd:
    @pytest.fixture(scope="class")
    def windows(self, synthetic_dir):
        return DatasetManager(synthetic_dir, verbose=False).load_windows(Position.WRIST)

    def _spec(self):
        return TrainSpec(max_epochs=3, early_stop_patience=2, batch_size=64, progress=False)

    def test_train_fold_on_one_source(self, windows):
        train = windows.select_source(SignalSource.HBC)
        torch.manual_seed(0)
        trained = train_fold(build_model(ModelConfig(signal_source="hbc")), train, self._spec(), fold="S9")
        assert trained.fold == "S9"
        assert 1 <= trained.epochs_run <= 3 and len(trained.history) == trained.epochs_run
        assert trained.predict_proba(train.X[:5]).shape == (5, 12)

    def test_louo_pools_every_window(self, windows):
        folds = []
        rep = run_louo(windows, ModelConfig(signal_source="hbc"), self._spec(), threads=1, on_fold=folds.append)
        assert rep.n == len(windows)
        assert [f["fold"] for f in rep.folds] == ["S1", "S2"]
        assert len(folds) == 2 and "predictions" in folds[0]
        assert 0.0 <= rep.accuracy <= 1.0

    def test_auth_holds_out_days(self, windows):
        rep = run_auth(windows, ModelConfig(signal_source="imu"), self._spec(), ActivityLabel.RUNNING)
        assert [f["fold"] for f in rep.folds] == ["D1", "D2"]
        assert rep.class_names == ["S1", "S2"]
        assert rep.n == len(windows.where_label(ActivityLabel.RUNNING))

    def test_auth_needs_windows_of_the_activity(self, windows):
        with pytest.raises(ValueError, match="no windows"):
            run_auth(windows, ModelConfig(signal_source="imu"), self._spec(), ActivityLabel.LEGPRESS)


def _training_spec(batch_size: int) -> TrainSpec:
    return TrainSpec(
        max_epochs=100,
        early_stop_patience=30,
        batch_size=batch_size,
        schedule=LrSchedule(initial=1e-3, decay_steps=1000),
        progress=False,
    )


@pytest.mark.slow
class TestSeparableActivities:
    """Accuracy on clean synthetic data whose classes are clearly apart."""

    def test_recognition_generalizes_to_unseen_subjects(self, tmp_path):
        activities = [ActivityLabel.ROPESKIPPING, ActivityLabel.RUNNING, ActivityLabel.WALKING, ActivityLabel.STAIRSCLIMBER]
        generate_dataset(
            tmp_path, n_subjects=3, n_days=1, activities=activities, seed=11,
            positions=[Position.WRIST], noise_level=0.05, threads=1, verbose=False,
        )
        windows = DatasetManager(tmp_path, verbose=False).load_windows(Position.WRIST)
        assert set(windows.class_counts()) == {*activities, ActivityLabel.NULL}
        rep = run_louo(windows, ModelConfig(signal_source="combined"), _training_spec(32), threads=1)
        assert [f["fold"] for f in rep.folds] == ["S1", "S2", "S3"]
        assert rep.accuracy >= 0.95

    def test_subjects_are_recognized_on_another_day(self, tmp_path):
        generate_dataset(
            tmp_path, n_subjects=4, n_days=2, activities=[ActivityLabel.RUNNING], seed=11,
            positions=[Position.WRIST], noise_level=0.05, threads=1, verbose=False,
        )
        windows = DatasetManager(tmp_path, verbose=False).load_windows(Position.WRIST)
        rep = run_auth(windows, ModelConfig(signal_source="combined"), _training_spec(16), ActivityLabel.RUNNING)
        assert rep.class_names == ["S1", "S2", "S3", "S4"]
        assert [f["fold"] for f in rep.folds] == ["D1", "D2"]
        assert rep.accuracy >= 0.95
