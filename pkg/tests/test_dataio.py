import json
import warnings

import numpy as np
import pytest

from conftest import DEFAULT_METADATA, make_recording, session_rows, write_session_csv
from dataio.dataset_manager import DatasetManager, RepetitionAnnotation, read_counts, write_counts
from dataio.sessions import (
    ActivityLabel,
    DataQualityWarning,
    Position,
    SessionIntegrityError,
    SessionParseError,
    SessionSchema,
    SessionSchemaError,
    parse_session,
    serialize_session,
)
from dataio.windows import (
    WINDOW_LEN,
    WINDOW_STRIDE,
    SignalSource,
    WindowSet,
    compute_sample_weights,
    majority_label,
    make_louo_folds,
    window_session,
    window_set_from_session,
)


# ----------------------------
# Parsing
# ----------------------------

class TestParseSession:
    def test_ten_minute_session_parses_without_warnings(self, tmp_path):
        rows = session_rows(12001, label="Walking")
        path = write_session_csv(tmp_path, rows)
        with warnings.catch_warnings():
            warnings.simplefilter("error", DataQualityWarning)
            rec = parse_session(path)
        assert rec.n_frames == 12001
        assert rec.signals.shape == (12001, 7)
        assert rec.subject_id == 1 and rec.day == 1 and rec.position is Position.WRIST
        assert set(rec.labels) == {ActivityLabel.WALKING}
        assert rec.duration_s == pytest.approx(600.0)

    def test_short_session_warns(self, tmp_path):
        path = write_session_csv(tmp_path, session_rows(200))
        with pytest.warns(DataQualityWarning, match="plausible"):
            rec = parse_session(path)
        assert rec.n_frames == 200

    def test_sampling_jitter_warns(self, tmp_path):
        rows = session_rows(12001)
        rows[50][0] = f"{50 * 0.05 + 0.03:.2f}"
        path = write_session_csv(tmp_path, rows)
        with pytest.warns(DataQualityWarning, match="deviate"):
            parse_session(path)

    def test_non_numeric_value_reports_line(self, tmp_path):
        rows = session_rows(20)
        rows[5][1] = "abc"
        path = write_session_csv(tmp_path, rows)
        with pytest.raises(SessionParseError) as err:
            parse_session(path)
        assert err.value.line == 7
        assert "hbc" in str(err.value)

    def test_non_finite_value_rejected(self, tmp_path):
        rows = session_rows(20)
        rows[3][4] = "nan"
        with pytest.raises(SessionParseError) as err:
            parse_session(write_session_csv(tmp_path, rows))
        assert err.value.line == 5

    def test_repeated_timestamp_is_integrity_error(self, tmp_path):
        rows = session_rows(20)
        rows[10][0] = rows[9][0]
        with pytest.raises(SessionIntegrityError) as err:
            parse_session(write_session_csv(tmp_path, rows))
        assert err.value.line == 12

    def test_unknown_label(self, tmp_path):
        rows = session_rows(20)
        rows[2][-1] = "Deadlift"
        with pytest.raises(SessionParseError, match="Deadlift") as err:
            parse_session(write_session_csv(tmp_path, rows))
        assert err.value.line == 4

    def test_padded_label_is_not_trimmed(self, tmp_path):
        rows = session_rows(20, label="Squat")
        rows[5][-1] = " Squat"
        with pytest.raises(SessionParseError, match="unknown label ' Squat'") as err:
            parse_session(write_session_csv(tmp_path, rows))
        assert err.value.line == 7

    def test_missing_channel_is_schema_error(self, tmp_path):
        header = ("timestamp", "hbc", "ax", "ay", "az", "gx", "gy", "label")
        rows = [r[:7] + [r[8]] for r in session_rows(20)]
        with pytest.raises(SessionSchemaError, match="gz") as err:
            parse_session(write_session_csv(tmp_path, rows, header=header))
        assert err.value.line == 1

    def test_missing_metadata_field(self, tmp_path):
        meta = {k: v for k, v in DEFAULT_METADATA.items() if k != "sole_material"}
        path = write_session_csv(tmp_path, session_rows(20), metadata=meta)
        with pytest.raises(SessionSchemaError, match="sole_material"):
            parse_session(path)

    def test_day_outside_protocol(self, tmp_path):
        path = write_session_csv(tmp_path, session_rows(20), metadata={**DEFAULT_METADATA, "day": 6})
        with pytest.raises(SessionSchemaError, match="day"):
            parse_session(path)

    def test_squat_ground_variants_map_to_squat(self, tmp_path):
        rows = session_rows(30, label="Squat_wood")
        rows[0][-1] = "squat_rubber"
        with pytest.warns(DataQualityWarning):
            rec = parse_session(write_session_csv(tmp_path, rows))
        assert set(rec.labels) == {ActivityLabel.SQUAT}

    def test_schema_adapter_renames_columns(self, tmp_path):
        schema_path = tmp_path / "schema.json"
        schema_path.write_text(
            json.dumps(
                {
                    "name": "vendor",
                    "columns": {"timestamp": "time_s", "hbc": "body_potential"},
                    "label_aliases": {"jog": "Running"},
                }
            ),
            encoding="utf-8",
        )
        schema = SessionSchema.from_json(schema_path)
        header = ("time_s", "body_potential", "ax", "ay", "az", "gx", "gy", "gz", "label")
        path = write_session_csv(tmp_path / "data", session_rows(40, label="jog"), header=header)
        with pytest.warns(DataQualityWarning):
            rec = parse_session(path, schema=schema)
        assert set(rec.labels) == {ActivityLabel.RUNNING}
        np.testing.assert_array_equal(rec.signals[:, 0], 1650.0)

    def test_schema_rejects_unknown_alias_target(self, tmp_path):
        path = tmp_path / "schema.json"
        path.write_text(json.dumps({"label_aliases": {"jog": "Jogging"}}), encoding="utf-8")
        with pytest.raises(SessionSchemaError, match="Jogging"):
            SessionSchema.from_json(path)

    def test_serialized_session_parses_back_exactly(self, tmp_path):
        rng = np.random.default_rng(0)
        labels = ["Null"] * 100 + ["Running"] * 100
        rec = make_recording(labels, subject_id=4, day=3, signals=rng.normal(size=(200, 7)))
        csv_path, json_path = serialize_session(rec, tmp_path / "S4_D3_wrist.csv")
        assert json.loads(json_path.read_text())["clothes_material"] == "polyester"
        with pytest.warns(DataQualityWarning):
            back = parse_session(csv_path)
        np.testing.assert_array_equal(back.signals, rec.signals)
        np.testing.assert_array_equal(back.label_indices, rec.label_indices)
        assert back.session_id == "S4_D3_wrist"

    def test_frames_view_matches_columns(self):
        rng = np.random.default_rng(1)
        rec = make_recording(["Null"] * 3 + ["Squat"] * 2, signals=rng.normal(size=(5, 7)))
        frames = rec.frames
        assert len(frames) == 5
        assert frames[4].label is ActivityLabel.SQUAT
        assert frames[4].timestamp == pytest.approx(0.2)
        assert frames[3].hbc == rec.signals[3, 0]
        assert frames[3].acc == tuple(rec.signals[3, 1:4])
        assert frames[3].gyro == tuple(rec.signals[3, 4:7])


# ----------------------------
# Windows
# ----------------------------

class TestWindows:
    def test_window_starts_and_count(self):
        rec = make_recording(["Running"] * 200)
        windows = window_session(rec)
        assert [w.start_index for w in windows] == [0, 40, 80, 120]
        assert all(w.channels.shape == (7, 80) for w in windows)
        np.testing.assert_array_equal(windows[1].channels[0], np.arange(40, 120))

    def test_session_shorter_than_window(self):
        rec = make_recording(["Running"] * 79)
        assert window_session(rec) == []
        assert window_set_from_session(rec) is None

    def test_window_set_matches_instances(self):
        labels = ["Null"] * 60 + ["Squat"] * 100 + ["Null"] * 80
        rec = make_recording(labels, subject_id=2, day=4)
        listed = window_session(rec)
        ws = window_set_from_session(rec)
        assert len(ws) == len(listed)
        for i, w in enumerate(listed):
            np.testing.assert_allclose(ws.X[i], w.channels)
            assert ws.labels[i] == w.label.index
        assert set(ws.subjects) == {2} and set(ws.days) == {4}

    def test_select_source_channels(self):
        ws = window_set_from_session(make_recording(["Running"] * 160))
        assert ws.select_source(SignalSource.HBC).n_channels == 1
        assert ws.select_source(SignalSource.IMU).n_channels == 6
        assert ws.select_source(SignalSource.COMBINED).n_channels == 7
        np.testing.assert_array_equal(ws.select_source(SignalSource.IMU).X, ws.X[:, 1:, :])

    def test_majority_label(self):
        run, squat, null = (ActivityLabel.RUNNING.index, ActivityLabel.SQUAT.index, ActivityLabel.NULL.index)
        assert majority_label(np.array([run] * 50 + [null] * 30)) is ActivityLabel.RUNNING
        assert majority_label(np.array([run] * 40 + [squat] * 40)) is ActivityLabel.NULL
        assert majority_label(np.array([run] * 30 + [squat] * 30 + [null] * 20)) is ActivityLabel.NULL

    def test_boundary_window_takes_majority(self):
        labels = ["Null"] * 50 + ["Legpress"] * 110
        ws = window_set_from_session(make_recording(labels))
        # window at 40 holds 10 Null and 70 Legpress frames
        assert ActivityLabel.from_index(ws.labels[1]) is ActivityLabel.LEGPRESS

    @pytest.mark.parametrize("n_frames", [80, 81, 119, 120, 200, 239, 601])
    def test_windows_cover_every_frame(self, n_frames):
        ws = window_set_from_session(make_recording(["Running"] * n_frames))
        n = len(ws)
        assert n == (n_frames - WINDOW_LEN) // WINDOW_STRIDE + 1
        covered = np.zeros(n_frames, dtype=int)
        for s in ws.starts:
            covered[s : s + WINDOW_LEN] += 1
        reach = (n - 1) * WINDOW_STRIDE + WINDOW_LEN
        assert (covered[:reach] >= 1).all()
        assert (covered[reach:] == 0).all()
        # half-overlap: everything but the first and last stride is seen twice
        if n > 1:
            assert (covered[WINDOW_STRIDE : reach - WINDOW_STRIDE] == 2).all()
            assert (covered[:WINDOW_STRIDE] == 1).all()
            assert (covered[reach - WINDOW_STRIDE : reach] == 1).all()


class TestSampleWeights:
    def test_balanced_weights(self):
        y = np.array([ActivityLabel.RUNNING.index] * 30 + [ActivityLabel.SQUAT.index] * 10)
        w = compute_sample_weights(y)
        assert w[ActivityLabel.RUNNING] == pytest.approx(40 / (2 * 30))
        assert w[ActivityLabel.SQUAT] == pytest.approx(2.0)
        # equal weighted mass per class, total mass preserved
        assert 30 * w[ActivityLabel.RUNNING] == pytest.approx(10 * w[ActivityLabel.SQUAT])
        assert 30 * w[ActivityLabel.RUNNING] + 10 * w[ActivityLabel.SQUAT] == pytest.approx(40)

    def test_single_class_weight_is_one(self):
        w = compute_sample_weights(np.full(12, ActivityLabel.NULL.index))
        assert w == {ActivityLabel.NULL: pytest.approx(1.0)}

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            compute_sample_weights(np.array([], dtype=np.int64))


class TestLouoFolds:
    def test_one_fold_per_subject_in_ascending_order(self):
        plan = make_louo_folds([3, 1, 2, 1, 3])
        assert [f.test_subject for f in plan] == [1, 2, 3]
        for fold in plan:
            assert fold.test_subject not in fold.train_subjects
            assert fold.train_subjects | {fold.test_subject} == {1, 2, 3}

    def test_single_subject_rejected(self):
        with pytest.raises(ValueError, match="at least 2"):
            make_louo_folds([5, 5, 5])

    def test_split_covers_all_windows(self):
        parts = [window_set_from_session(make_recording(["Running"] * 200, subject_id=s)) for s in (1, 2, 3)]
        ws = WindowSet.concatenate(parts)
        for fold, tr, te in make_louo_folds(ws).split(ws):
            assert len(tr) + len(te) == len(ws)
            assert set(ws.subjects[te]) == {fold.test_subject}

    @pytest.mark.parametrize("seed", range(5))
    def test_test_sets_partition_the_windows(self, seed):
        rng = np.random.default_rng(seed)
        subjects = rng.choice(np.arange(1, 11), size=rng.integers(2, 8), replace=False)
        ws = WindowSet.concatenate(
            [
                window_set_from_session(make_recording(["Walking"] * int(rng.integers(80, 400)), subject_id=int(s)))
                for s in subjects
            ]
        )
        seen = np.zeros(len(ws), dtype=int)
        for fold, tr, te in make_louo_folds(ws).split(ws):
            seen[te] += 1
            assert not np.intersect1d(tr, te).size
            assert len(tr) + len(te) == len(ws)
        assert (seen == 1).all()


# ----------------------------
# Dataset directory
# ----------------------------

class TestDatasetManager:
    def test_scan_and_load(self, synthetic_dir):
        mgr = DatasetManager(synthetic_dir, verbose=False)
        assert mgr.subjects() == [1, 2]
        assert mgr.positions() == [Position.WRIST]
        assert [e.stem for e in mgr.entries] == ["S1_D1_wrist", "S1_D2_wrist", "S2_D1_wrist", "S2_D2_wrist"]
        info = mgr.get_dataset_info(Position.WRIST)
        assert info["has_counts"] is True
        assert info["days"] == [1, 2]
        assert set(info["frames_per_class"]) == {"Null", "Squat", "Armcurl", "Running"}
        mgr.close()

    def test_missing_directory(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            DatasetManager(tmp_path / "nope", verbose=False)

    def test_counts_sidecar(self, tmp_path):
        csv_path = tmp_path / "S1_D1_wrist.csv"
        anns = [RepetitionAnnotation(ActivityLabel.SQUAT, 200, 800, 10)]
        write_counts(csv_path, anns)
        assert read_counts(csv_path) == anns

    def test_counts_sidecar_rejects_null_segment(self, tmp_path):
        csv_path = tmp_path / "S1_D1_wrist.csv"
        (tmp_path / "S1_D1_wrist.counts.json").write_text(
            json.dumps({"segments": [{"activity": "Null", "start": 0, "stop": 10, "count": 1}]}),
            encoding="utf-8",
        )
        with pytest.raises(SessionSchemaError):
            read_counts(csv_path)
