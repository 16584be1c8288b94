import math

import numpy as np
import pytest

from freqforest.errors import DataError, ParseError
from freqforest.flow import BoundingBox
from freqforest.pose import (
    JOINT_INDEX,
    JOINT_NAMES,
    POSE_FEATURE_NAMES,
    JointMap,
    Pose15,
    PoseTrack,
    RawPose,
    convert_pose,
    default_joint_map,
    interpolate_track,
    load_joint_map,
    pose_feature_series,
    select_best_pose,
    standardize_pose,
)


def make_pose(**overrides):
    """A plausible standing skeleton; joints overridable by name."""
    base = {
        "head": (5, 0), "neck": (5, 2), "torso": (5, 6),
        "left_shoulder": (3, 2), "right_shoulder": (7, 2),
        "left_elbow": (2, 5), "right_elbow": (8, 5),
        "left_hand": (2, 8), "right_hand": (8, 8),
        "left_hip": (4, 9), "right_hip": (6, 9),
        "left_knee": (4, 12), "right_knee": (6, 12),
        "left_foot": (4, 15), "right_foot": (6, 15),
    }
    base.update(overrides)
    return Pose15.from_named(base)


class TestJointMap:
    def test_default_map_is_complete(self):
        jm = default_joint_map()
        assert set(jm.sources) == set(JOINT_NAMES)
        for idxs in jm.sources.values():
            assert all(0 <= i < 26 for i in idxs)

    def test_missing_target_rejected(self):
        with pytest.raises(ValueError):
            JointMap({"head": (0,)})

    def test_load_errors_carry_line_numbers(self, tmp_path):
        p = tmp_path / "map.txt"
        p.write_text("head 0 1\nneck x\n")
        with pytest.raises(ParseError, match="map.txt:2"):
            load_joint_map(p)


class TestConvertPose:
    def test_single_source_passthrough(self):
        jm = default_joint_map()
        raw = np.zeros((26, 2))
        raw[list(jm.sources["neck"])] = (3, 4)
        pose = convert_pose(RawPose(raw, 0.9), jm)
        np.testing.assert_allclose(pose["neck"], (3, 4))

    def test_two_sources_average(self):
        sources = {name: (i,) for i, name in enumerate(JOINT_NAMES)}
        sources["head"] = (20, 21)
        jm = JointMap(sources)
        raw = np.zeros((26, 2))
        raw[20] = (0, 0)
        raw[21] = (2, 2)
        pose = convert_pose(RawPose(raw, 0.5), jm)
        np.testing.assert_allclose(pose["head"], (1, 1))

    def test_out_of_range_source_rejected(self):
        sources = {name: (i,) for i, name in enumerate(JOINT_NAMES)}
        sources["head"] = (26,)
        jm = JointMap(sources)
        with pytest.raises(ValueError):
            convert_pose(RawPose(np.zeros((26, 2)), 0.5), jm)

    def test_wrong_joint_count_rejected(self):
        with pytest.raises(ValueError):
            convert_pose(RawPose(np.zeros((15, 2)), 0.5), default_joint_map())


class TestSelectBestPose:
    box = BoundingBox(0, 0, 10, 20)

    def _candidate(self, score, offset=0.0):
        joints = np.column_stack([np.linspace(1, 9, 26) + offset,
                                  np.linspace(1, 19, 26)])
        return RawPose(joints, score)

    def test_highest_score_among_fitting(self):
        a, b = self._candidate(0.9), self._candidate(0.5)
        assert select_best_pose([b, a], self.box) is a

    def test_fit_precedes_score(self):
        inside = self._candidate(0.3)
        outside = self._candidate(0.99, offset=500.0)
        assert select_best_pose([outside, inside], self.box) is inside

    def test_empty_candidates(self):
        assert select_best_pose([], self.box) is None

    def test_expansion_margin_counts_as_inside(self):
        # x = -1 is inside the 10%-expanded box [-1, 11]
        joints = np.column_stack([np.full(26, -1.0), np.linspace(0, 19, 26)])
        cand = RawPose(joints, 0.5)
        assert select_best_pose([cand], self.box) is cand

    def test_eighty_percent_rule(self):
        joints = np.column_stack([np.full(26, 5.0), np.full(26, 10.0)])
        joints[:6, 0] = 1e6  # 6 of 26 outside: 76.9% inside, under 80%
        assert select_best_pose([RawPose(joints, 0.9)], self.box) is None
        joints5 = joints.copy()
        joints5[5, 0] = 5.0  # 5 outside: 80.8% inside
        best = select_best_pose([RawPose(joints5, 0.9)], self.box)
        assert best is not None


class TestStandardize:
    def test_scales_by_larger_extent(self):
        pose = make_pose(head=(0, 0), right_foot=(50, 100))
        out = standardize_pose(pose)
        np.testing.assert_allclose(out["right_foot"], (0.5, 1.0))

    def test_unit_pose_is_fixed_point(self):
        joints = np.random.default_rng(1).uniform(0, 1, size=(15, 2))
        joints[0] = (0, 0)
        joints[1] = (1, 1)
        out = standardize_pose(Pose15(joints))
        np.testing.assert_allclose(out.joints, joints, atol=1e-12)

    def test_degenerate_pose_maps_to_center(self):
        out = standardize_pose(Pose15(np.full((15, 2), 7.0)))
        np.testing.assert_array_equal(out.joints, np.full((15, 2), 0.5))

    def test_idempotent(self):
        rng = np.random.default_rng(2)
        for _ in range(50):
            pose = Pose15(rng.normal(scale=40, size=(15, 2)))
            once = standardize_pose(pose)
            twice = standardize_pose(once)
            np.testing.assert_allclose(twice.joints, once.joints, atol=1e-12)

    def test_output_in_unit_square(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            out = standardize_pose(Pose15(rng.normal(scale=100, size=(15, 2))))
            assert np.all(out.joints >= 0.0)
            assert np.all(out.joints <= 1.0)

    def test_translation_and_scale_invariance(self):
        rng = np.random.default_rng(4)
        for _ in range(50):
            joints = rng.normal(scale=10, size=(15, 2))
            ref = standardize_pose(Pose15(joints)).joints
            moved = joints * rng.uniform(0.1, 40) + rng.uniform(-500, 500, size=2)
            out = standardize_pose(Pose15(moved)).joints
            np.testing.assert_allclose(out, ref, atol=1e-9)

    def test_nonfinite_rejected(self):
        joints = np.zeros((15, 2))
        joints[3, 0] = np.nan
        with pytest.raises(DataError):
            standardize_pose(Pose15(joints))


class TestInterpolateTrack:
    def test_linear_gap_fill(self):
        poses = []
        for x in [0.0, 1.0, None, 3.0, 4.0]:
            poses.append(None if x is None else make_pose(left_hand=(x, 8)))
        coords = interpolate_track(PoseTrack(poses))
        assert coords[2, JOINT_INDEX["left_hand"], 0] == 2.0

    def test_edges_copy_nearest(self):
        poses = [None, make_pose(left_hand=(5, 8)), None, None]
        coords = interpolate_track(PoseTrack(poses))
        assert coords[0, JOINT_INDEX["left_hand"], 0] == 5.0
        assert coords[3, JOINT_INDEX["left_hand"], 0] == 5.0

    def test_no_matched_frames_rejected(self):
        with pytest.raises(DataError):
            interpolate_track(PoseTrack([None, None]))


class TestPoseFeatureSeries:
    def test_static_pose_gives_constant_series(self):
        track = PoseTrack([make_pose()] * 30)
        series = pose_feature_series(track)
        assert set(series) == set(POSE_FEATURE_NAMES)
        for name, values in series.items():
            assert values.shape == (30,)
            np.testing.assert_allclose(values, values[0], atol=1e-12)

    def test_right_angle_elbow(self):
        pose = make_pose(left_shoulder=(0, 0), left_elbow=(0, 1), left_hand=(1, 1))
        series = pose_feature_series(PoseTrack([pose] * 10))
        np.testing.assert_allclose(series["left_elbow_angle"], math.pi / 2, atol=1e-12)

    def test_feature_ranges(self):
        rng = np.random.default_rng(5)
        poses = [Pose15(rng.uniform(0, 30, size=(15, 2))) for _ in range(40)]
        series = pose_feature_series(PoseTrack(poses))
        for name, values in series.items():
            assert values.shape == (40,)
            if name.endswith("_angle"):
                assert np.all(values >= 0.0) and np.all(values <= math.pi + 1e-12)
            else:
                assert np.all(values >= -1.0) and np.all(values <= 1.0)

    def test_all_unmatched_rejected(self):
        with pytest.raises(DataError):
            pose_feature_series(PoseTrack([None] * 5))

    def test_catalog_has_15_names(self):
        assert len(POSE_FEATURE_NAMES) == 15
        assert len(set(POSE_FEATURE_NAMES)) == 15
