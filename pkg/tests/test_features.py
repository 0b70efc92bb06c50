import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from skilltransfer import synth
from skilltransfer.features import (
    FeatureMatrix,
    extract_features,
    invert,
    read_features,
    standardize,
    to_raw_units,
    write_features,
)
from skilltransfer.trajectory import SegmentedTrial, SpeedProfile, segment_and_filter

from helpers import matrix


def _segmented(trial_id, speeds):
    prof = SpeedProfile(0.0, 1 / 60, speeds)
    return SegmentedTrial(trial_id, prof, float(prof.speed[-1]), float(prof.speed.max()))


class TestExtract:
    def test_order_and_count(self):
        trials = [_segmented(f"t{i}", np.r_[np.linspace(0, 1 + i, 10), [0.5]]) for i in range(5)]
        m, dropped = extract_features(trials)
        assert m.trial_ids == tuple(f"t{i}" for i in range(5))
        assert not dropped
        assert m.values.shape == (5, 2)

    def test_pv_is_max_sample(self):
        speeds = np.r_[np.full(20, 0.8), np.linspace(0.8, 0.0, 10)]
        m, _ = extract_features([_segmented("ramp", speeds)])
        assert m.tuples[0].pv == 0.8

    def test_min_jerk_pv(self):
        traj = synth.generate_trial(synth.SynthSpec(displacement=0.3, duration=1.0))
        seg = segment_and_filter(traj, 0.05, (0.0, 10.0))
        m, _ = extract_features([seg])
        assert m.tuples[0].pv == pytest.approx(0.5625, abs=1e-3)

    def test_failing_trial_dropped(self):
        good = _segmented("good", np.linspace(0.1, 1, 10))
        bad = _segmented("bad", np.zeros(10))
        m, dropped = extract_features([good, bad])
        assert m.trial_ids == ("good",)
        assert dropped[0].trial_id == "bad" and "zero DC" in dropped[0].reason


class TestStandardize:
    def test_two_points(self):
        z = standardize(matrix([[1, -2], [3, -4]]))
        assert np.allclose(z.values, [[-1, 1], [1, -1]])
        assert np.allclose(z.scaling[0], [2, -3])

    def test_zero_variance(self):
        with pytest.raises(ValueError, match="zero variance: pv"):
            standardize(matrix([[1, -2], [1, -4]]))

    @settings(max_examples=50, deadline=None)
    @given(arrays(float, (12, 2), elements=st.floats(-10, 10)))
    def test_round_trip(self, values):
        if np.any(values.std(axis=0) < 1e-3):
            return
        m = matrix(values)
        back = invert(standardize(m))
        assert np.abs(back.values - values).max() < 1e-12
        assert np.abs(standardize(m).raw_values() - values).max() < 1e-12

    def test_to_raw_units(self):
        z = standardize(matrix([[1, -2], [3, -4]]))
        assert np.allclose(to_raw_units(z, [[0, 0]]), [[2, -3]])


class TestMatrix:
    def test_shape_checked(self):
        with pytest.raises(ValueError, match="does not match"):
            FeatureMatrix(("a",), np.zeros((2, 2)))

    def test_read_only(self):
        m = matrix([[1, 2]])
        with pytest.raises(ValueError):
            m.values[0, 0] = 5

    def test_file_round_trip(self, tmp_path):
        m = matrix(np.random.default_rng(0).normal(size=(7, 2)))
        write_features(tmp_path / "f.csv", m)
        back = read_features(tmp_path / "f.csv")
        assert back.trial_ids == m.trial_ids
        assert np.array_equal(back.values, m.values)
