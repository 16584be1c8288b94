"""Articulated-pose tracks and the pose feature series.

Raw detections come in a 26-joint format; a configurable joint map
averages groups of raw joints down to the 15-joint skeleton used here
(the published detector's mapping is not part of this package, so the
map ships as a plain text table and can be overridden). Poses are
matched to bounding boxes by detection score, gaps in the track are
linearly interpolated, joint trajectories are smoothed, and every frame
is standardized to the unit square before the fifteen displacement and
angle series are derived.
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources

import numpy as np

from .errors import DataError, ParseError
from .flow import BoundingBox
from .spectral import DEFAULT_SMOOTHING_WINDOW, smooth

JOINT_NAMES = (
    "head",
    "neck",
    "torso",
    "left_shoulder",
    "right_shoulder",
    "left_elbow",
    "right_elbow",
    "left_hand",
    "right_hand",
    "left_hip",
    "right_hip",
    "left_knee",
    "right_knee",
    "left_foot",
    "right_foot",
)
JOINT_INDEX = {name: i for i, name in enumerate(JOINT_NAMES)}

N_RAW_JOINTS = 26

POSE_FEATURE_NAMES = (
    "dx_left_hand_left_shoulder",
    "dy_left_hand_left_shoulder",
    "dx_right_hand_right_shoulder",
    "dy_right_hand_right_shoulder",
    "left_elbow_angle",
    "right_elbow_angle",
    "left_shoulder_angle",
    "right_shoulder_angle",
    "left_knee_angle",
    "right_knee_angle",
    "dy_left_foot_torso",
    "dy_right_foot_torso",
    "dx_left_foot_right_foot",
    "dx_left_hand_right_hand",
    "dy_head_torso",
)

# (name, kind, joints): displacement = axis difference a - b of
# standardized coordinates; angle = interior angle at the middle joint.
_FEATURE_DEFS = (
    ("dx_left_hand_left_shoulder", "dx", ("left_hand", "left_shoulder")),
    ("dy_left_hand_left_shoulder", "dy", ("left_hand", "left_shoulder")),
    ("dx_right_hand_right_shoulder", "dx", ("right_hand", "right_shoulder")),
    ("dy_right_hand_right_shoulder", "dy", ("right_hand", "right_shoulder")),
    ("left_elbow_angle", "angle", ("left_shoulder", "left_elbow", "left_hand")),
    ("right_elbow_angle", "angle", ("right_shoulder", "right_elbow", "right_hand")),
    ("left_shoulder_angle", "angle", ("neck", "left_shoulder", "left_elbow")),
    ("right_shoulder_angle", "angle", ("neck", "right_shoulder", "right_elbow")),
    ("left_knee_angle", "angle", ("left_hip", "left_knee", "left_foot")),
    ("right_knee_angle", "angle", ("right_hip", "right_knee", "right_foot")),
    ("dy_left_foot_torso", "dy", ("left_foot", "torso")),
    ("dy_right_foot_torso", "dy", ("right_foot", "torso")),
    ("dx_left_foot_right_foot", "dx", ("left_foot", "right_foot")),
    ("dx_left_hand_right_hand", "dx", ("left_hand", "right_hand")),
    ("dy_head_torso", "dy", ("head", "torso")),
)


@dataclass
class RawPose:
    """One detected pose: joint positions plus a detection score."""

    joints: np.ndarray  # (n, 2) pixel coordinates
    score: float

    def __post_init__(self):
        arr = np.asarray(self.joints, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[1] != 2 or arr.shape[0] < 1:
            raise ValueError(f"pose joints must have shape (n, 2), got {arr.shape}")
        self.joints = arr
        self.score = float(self.score)


class Pose15:
    """A 15-joint skeleton; joints indexable by name."""

    def __init__(self, joints):
        arr = np.asarray(joints, dtype=np.float64)
        if arr.shape != (15, 2):
            raise ValueError(f"Pose15 needs shape (15, 2), got {arr.shape}")
        self.joints = arr

    def __getitem__(self, name: str) -> np.ndarray:
        return self.joints[JOINT_INDEX[name]]

    @classmethod
    def from_named(cls, named: dict[str, tuple[float, float]]) -> "Pose15":
        return cls(np.array([named[name] for name in JOINT_NAMES], dtype=np.float64))


@dataclass
class JointMap:
    """For each 15-format joint, the raw-format source indices whose
    positions are averaged."""

    sources: dict[str, tuple[int, ...]]

    def __post_init__(self):
        missing = [n for n in JOINT_NAMES if n not in self.sources]
        if missing:
            raise ValueError(f"joint map missing targets: {missing}")
        unknown = [n for n in self.sources if n not in JOINT_INDEX]
        if unknown:
            raise ValueError(f"joint map has unknown targets: {unknown}")
        for name, idxs in self.sources.items():
            if len(idxs) == 0:
                raise ValueError(f"joint map target {name!r} has no sources")


@dataclass
class PoseTrack:
    """Per-frame matched pose (None where no candidate fit the box)."""

    frames: list  # list[Pose15 | None]

    @property
    def n_frames(self) -> int:
        return len(self.frames)


def load_joint_map(path) -> JointMap:
    """Parse a joint-map table: one line per target joint, the target
    name followed by its raw source indices."""
    sources: dict[str, tuple[int, ...]] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) < 2:
                raise ParseError("expected: target_name src_idx [src_idx ...]",
                                 path=str(path), line=lineno)
            name = parts[0]
            if name in sources:
                raise ParseError(f"duplicate target joint {name!r}", path=str(path), line=lineno)
            try:
                idxs = tuple(int(tok) for tok in parts[1:])
            except ValueError:
                raise ParseError("source indices must be integers",
                                 path=str(path), line=lineno) from None
            if any(i < 0 for i in idxs):
                raise ParseError("source indices must be nonnegative",
                                 path=str(path), line=lineno)
            sources[name] = idxs
    try:
        return JointMap(sources)
    except ValueError as exc:
        raise ParseError(str(exc), path=str(path)) from None


def default_joint_map() -> JointMap:
    """The 26-to-15 map shipped with the package."""
    ref = resources.files("freqforest").joinpath("data/joint_map_26to15.txt")
    with resources.as_file(ref) as path:
        return load_joint_map(path)


def convert_pose(raw: RawPose, joint_map: JointMap) -> Pose15:
    """Average the mapped raw joints into the 15-joint format."""
    if raw.joints.shape[0] != N_RAW_JOINTS:
        raise ValueError(
            f"expected {N_RAW_JOINTS} raw joints, got {raw.joints.shape[0]}")
    out = np.empty((15, 2))
    for name, idxs in joint_map.sources.items():
        if max(idxs) >= N_RAW_JOINTS:
            raise ValueError(
                f"joint map target {name!r} references source index {max(idxs)} >= {N_RAW_JOINTS}")
        out[JOINT_INDEX[name]] = raw.joints[list(idxs)].mean(axis=0)
    return Pose15(out)


def select_best_pose(candidates, bbox: BoundingBox, min_inside: float = 0.8,
                     expand: float = 0.1):
    """The highest-scoring candidate that fits the bounding box.

    A candidate fits when at least ``min_inside`` of its joints lie in
    the box expanded by ``expand * w`` and ``expand * h`` on each side.
    Returns None when nothing fits.
    """
    x0 = bbox.x - expand * bbox.w
    x1 = bbox.x + bbox.w + expand * bbox.w
    y0 = bbox.y - expand * bbox.h
    y1 = bbox.y + bbox.h + expand * bbox.h
    best = None
    for cand in candidates:
        j = cand.joints
        inside = np.count_nonzero(
            (j[:, 0] >= x0) & (j[:, 0] <= x1) & (j[:, 1] >= y0) & (j[:, 1] <= y1))
        if inside < min_inside * j.shape[0]:
            continue
        if best is None or cand.score > best.score:
            best = cand
    return best


def _standardize_coords(joints: np.ndarray) -> np.ndarray:
    if not np.all(np.isfinite(joints)):
        raise DataError("pose contains non-finite coordinates")
    mins = joints.min(axis=0)
    extent = joints.max(axis=0) - mins
    scale = float(extent.max())
    if scale == 0.0:
        return np.full_like(joints, 0.5)
    return (joints - mins) / scale


def standardize_pose(pose: Pose15) -> Pose15:
    """Translate and uniformly scale a pose into the unit square.

    The joint bounding rectangle's min corner moves to the origin and
    coordinates are divided by the larger extent, preserving aspect
    ratio. A pose with zero extent maps every joint to (0.5, 0.5).
    """
    return Pose15(_standardize_coords(pose.joints))


def interpolate_track(track: PoseTrack) -> np.ndarray:
    """Fill unmatched frames: linear interpolation of each joint
    coordinate between the nearest matched frames, copying the nearest
    match at the track's edges. Returns an (n_frames, 15, 2) array."""
    n = track.n_frames
    matched = [t for t, p in enumerate(track.frames) if p is not None]
    if not matched:
        raise DataError("pose track has no matched frames")
    coords = np.empty((n, 15, 2))
    stack = np.stack([track.frames[t].joints for t in matched])
    ts = np.arange(n, dtype=np.float64)
    mts = np.asarray(matched, dtype=np.float64)
    for j in range(15):
        for c in range(2):
            coords[:, j, c] = np.interp(ts, mts, stack[:, j, c])
    return coords


def _angle_at(b_to_a: np.ndarray, b_to_c: np.ndarray) -> np.ndarray:
    na = np.linalg.norm(b_to_a, axis=1)
    nc = np.linalg.norm(b_to_c, axis=1)
    denom = na * nc
    dots = np.einsum("ij,ij->i", b_to_a, b_to_c)
    cosine = np.divide(dots, denom, out=np.zeros_like(dots), where=denom > 0)
    angles = np.arccos(np.clip(cosine, -1.0, 1.0))
    return np.where(denom > 0, angles, 0.0)


def pose_feature_series(track: PoseTrack,
                        window: int = DEFAULT_SMOOTHING_WINDOW) -> dict[str, np.ndarray]:
    """The fifteen named pose series of a track, one value per frame.

    Processing order: interpolate gaps, smooth each joint coordinate
    trajectory, standardize every frame to the unit square, then derive
    the displacement and angle features. Angles are in radians within
    [0, pi]; displacements of standardized poses lie in [-1, 1].
    """
    coords = interpolate_track(track)
    n = coords.shape[0]
    for j in range(15):
        for c in range(2):
            coords[:, j, c] = smooth(coords[:, j, c], window)
    std = np.empty_like(coords)
    for t in range(n):
        std[t] = _standardize_coords(coords[t])

    def joint(name):
        return std[:, JOINT_INDEX[name], :]

    out: dict[str, np.ndarray] = {}
    for name, kind, joints in _FEATURE_DEFS:
        if kind == "dx":
            out[name] = joint(joints[0])[:, 0] - joint(joints[1])[:, 0]
        elif kind == "dy":
            out[name] = joint(joints[0])[:, 1] - joint(joints[1])[:, 1]
        else:
            a, b, c = (joint(j) for j in joints)
            out[name] = _angle_at(a - b, c - b)
    return out
