import numpy as np
import pytest

from conftest import make_recording
from counting.repetitions import (
    REPORT_SOURCES,
    CountConfig,
    CountSource,
    count_accuracy,
    count_source,
    evaluate_counting,
    fuse_closest_two,
    fuse_imu,
    grid_search,
    grid_search_peak_params,
)
from counting.segments import ExerciseSegment, extract_segments, label_runs
from dataio.dataset_manager import DatasetManager, RepetitionAnnotation
from dataio.sessions import ActivityLabel, Position, SessionSchemaError
from synth.frontend import simulate_hbc
from synth.motion import MotionScript, MotionStep, simulate_imu


def _synthetic_segment(
    activity: ActivityLabel, freq: float, reps: int = 10, noise_level: float = 0.0, seed: int = 0
) -> ExerciseSegment:
    step = MotionStep.repetitions(
        activity,
        reps,
        freq,
        amplitude={"acc": 3.0, "gyro": 1.5, "hbc": 0.5},
        acc_axis=(0.0, 0.6, 0.8),
        gyro_axis=(1.0, 0.0, 0.0),
        harmonic=0.05,
        noise_level=noise_level,
    )
    script = MotionScript(steps=(step,))
    signals = np.column_stack(
        [simulate_hbc(script, fs=20.0, seed=seed).values, simulate_imu(script, fs=20.0, seed=seed + 1)]
    )
    return ExerciseSegment(activity, signals, reps, "S1_D1_wrist", 1, Position.WRIST)


class TestFormulas:
    @pytest.mark.parametrize(
        "detected,real,expected",
        [(10, 10, 1.0), (8, 10, 0.8), (12, 10, 0.8), (0, 10, 0.0), (10.5, 10, 0.95), (25, 10, -0.5)],
    )
    def test_count_accuracy(self, detected, real, expected):
        assert count_accuracy(detected, real) == pytest.approx(expected)

    def test_count_accuracy_needs_positive_truth(self):
        with pytest.raises(ValueError):
            count_accuracy(3, 0)

    def test_fuse_imu_is_the_mean(self):
        assert fuse_imu(9, 12) == 10.5

    @pytest.mark.parametrize(
        "acc,gyro,hbc,expected",
        [
            (10, 14, 11, 10.5),  # acc-hbc closest
            (10, 12, 14, 13.0),  # acc-gyro ties gyro-hbc: hbc pair wins
            (8, 12, 10, 9.0),    # two hbc pairs tie: lower mean
            (10, 10, 20, 10.0),
            (7, 7, 7, 7.0),
        ],
    )
    def test_fuse_closest_two(self, acc, gyro, hbc, expected):
        assert fuse_closest_two(acc, gyro, hbc) == expected


class TestConfig:
    def test_default_grid(self):
        cfg = CountConfig()
        grid = cfg.grid()
        assert len(grid) == 9 * 12
        assert (grid[0].threshold, grid[0].min_distance) == (0.1, 5)
        assert (grid[-1].threshold, grid[-1].min_distance) == (0.9, 60)

    def test_cutoff_per_activity(self):
        cfg = CountConfig()
        for fast in (ActivityLabel.RUNNING, ActivityLabel.WALKING, ActivityLabel.ROPESKIPPING, ActivityLabel.RIDING):
            assert cfg.cutoff_for(fast) == 5.0
        for slow in (ActivityLabel.SQUAT, ActivityLabel.LEGPRESS, ActivityLabel.STAIRSCLIMBER):
            assert cfg.cutoff_for(slow) == 2.5

    def test_empty_grid_rejected(self):
        with pytest.raises(ValueError):
            CountConfig(thresholds=()).grid()


class TestSegments:
    def test_label_runs(self):
        assert label_runs(np.array([11, 11, 8, 8, 8, 11])) == [(11, 0, 2), (8, 2, 5), (11, 5, 6)]

    def test_default_counts_cover_strength_runs_only(self):
        labels = ["Null"] * 20 + ["Squat"] * 50 + ["Null"] * 10 + ["Running"] * 60 + ["Armcurl"] * 40
        segs = extract_segments(make_recording(labels))
        assert [(s.activity, s.start, s.n_frames, s.true_count) for s in segs] == [
            (ActivityLabel.SQUAT, 20, 50, 10),
            (ActivityLabel.ARMCURL, 140, 40, 10),
        ]

    def test_annotations_define_segments(self):
        labels = ["Null"] * 20 + ["Running"] * 60
        ann = [RepetitionAnnotation(ActivityLabel.RUNNING, 20, 80, 42)]
        (seg,) = extract_segments(make_recording(labels), ann)
        assert seg.true_count == 42 and seg.n_frames == 60

    def test_annotation_must_match_labels(self):
        labels = ["Null"] * 20 + ["Running"] * 60
        ann = [RepetitionAnnotation(ActivityLabel.RUNNING, 10, 80, 42)]
        with pytest.raises(SessionSchemaError, match="other labels"):
            extract_segments(make_recording(labels), ann)

    def test_null_segment_rejected(self):
        with pytest.raises(ValueError):
            ExerciseSegment(ActivityLabel.NULL, np.zeros((10, 7)), 1, "s", 1, Position.WRIST)


class TestNoiselessCounting:
    @pytest.mark.parametrize(
        "activity,freq",
        [
            (ActivityLabel.SQUAT, 0.3),
            (ActivityLabel.SQUAT, 0.5),
            (ActivityLabel.RUNNING, 1.0),
            (ActivityLabel.RUNNING, 2.0),
        ],
    )
    def test_every_source_can_count_exactly(self, activity, freq):
        seg = _synthetic_segment(activity, freq)
        cfg = CountConfig()
        for source in CountSource:
            best = grid_search([seg], source, cfg, threads=1)
            assert best.mean_accuracy == pytest.approx(1.0), source

    def test_searched_params_reproduce_the_count(self):
        seg = _synthetic_segment(ActivityLabel.SQUAT, 0.5)
        cfg = CountConfig()
        for source in CountSource:
            params = grid_search_peak_params([seg], source, cfg, threads=1)
            assert params == grid_search([seg], source, cfg, threads=1).params
            assert count_source(seg, source, cfg, params) == 10, source


# amplitude ratio for a 10 dB signal-to-noise power ratio
SNR_10DB = 10 ** (-10 / 20)


@pytest.mark.slow
class TestNoisyCounting:
    @pytest.mark.parametrize(
        "activity,freq",
        [
            (ActivityLabel.SQUAT, 0.3),
            (ActivityLabel.SQUAT, 0.5),
            (ActivityLabel.RUNNING, 1.0),
            (ActivityLabel.RUNNING, 2.0),
        ],
    )
    @pytest.mark.parametrize("source", [CountSource.ACC, CountSource.GYRO, CountSource.HBC])
    def test_counts_hold_at_10db(self, activity, freq, source):
        cfg = CountConfig()
        scores = [
            grid_search([_synthetic_segment(activity, freq, noise_level=SNR_10DB, seed=seed)], source, cfg, threads=1)
            .mean_accuracy
            for seed in range(3)
        ]
        assert np.mean(scores) >= 0.95, scores


class TestEvaluateCounting:
    @pytest.fixture(scope="class")
    def segments(self, synthetic_dir):
        mgr = DatasetManager(synthetic_dir, verbose=False)
        segs = []
        for entry in mgr.list_sessions(Position.WRIST):
            segs.extend(extract_segments(mgr.load_session(entry), mgr.load_counts(entry)))
        return segs

    def test_generated_sessions_yield_sets_and_bouts(self, segments):
        per_session = {}
        for s in segments:
            per_session.setdefault(s.session, []).append(s.activity)
        assert len(per_session) == 4
        for acts in per_session.values():
            assert sorted(a.value for a in acts) == sorted(["Squat"] * 3 + ["Armcurl"] * 3 + ["Running"])

    def test_upper_bound_per_activity(self, segments):
        ev = evaluate_counting(segments, CountConfig(per_activity=True), mode="upper-bound", threads=1)
        rows = ev.rows()
        assert len(rows) == len(segments) * len(REPORT_SOURCES)
        assert set(ev.params) == {"all"}
        assert set(ev.params["all"]) == {"wrist/Armcurl", "wrist/Running", "wrist/Squat"}
        combined = rows[rows.source == "combined"]["accuracy"]
        assert combined.mean() > 0.9

        summary = ev.summary()
        overall = summary[summary.activity == "all"]
        assert list(overall.source) == list(REPORT_SOURCES)

    def test_louo_fits_on_other_subjects(self, segments):
        cfg = CountConfig(thresholds=(0.3, 0.5), min_distance_s=(0.5, 1.0))
        ev = evaluate_counting(segments, cfg, mode="louo", threads=1)
        assert set(ev.params) == {"S1", "S2"}
        assert len(ev.results) == len(segments)

    def test_louo_needs_two_subjects(self, segments):
        only_one = [s for s in segments if s.subject_id == 1]
        with pytest.raises(ValueError, match="2 subjects"):
            evaluate_counting(only_one, CountConfig(), mode="louo")

    def test_unknown_mode(self, segments):
        with pytest.raises(ValueError, match="grid mode"):
            evaluate_counting(segments, CountConfig(), mode="oracle")
