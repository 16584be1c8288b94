"""Line-oriented text formats for tracks, manifests and feature files.

All formats are space-separated with ``#`` starting a comment; blank
and comment-only lines are ignored. Parse failures raise ParseError
with the file path and line number.

Formats:
  flow track    FLOWTRACK 1 <frames> <width> <height>, then per frame a
                ``FRAME <idx>`` line followed by width*height ``u v``
                lines in row-major order.
  pose track    POSETRACK 1 <frames> <joints>, then ``FRAME <idx>``
                blocks of one ``x y score`` line per joint. A frame may
                appear in several blocks (several detected candidates)
                or in none at all.
  boxes         BOXES 1 <frames>, then ``frame x y w h`` lines, one per
                annotated frame; unannotated frames are filled by
                linear interpolation between the nearest annotations.
  manifest      ``LABELS ...`` and ``SCENARIOS ...`` header lines (plus
                an optional ``FPS ...``), then one
                ``clip_id actor scenario label flow pose boxes`` record
                per clip. Paths are relative to the manifest; ``-``
                marks a file that intentionally does not exist (e.g.
                feature-only workflows).
  features      FEATURES 1 <n> <names...>, then per sample a
                ``clip_id label [actor [scenario]]`` line followed by
                one ``name v1 .. vN`` line per feature.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ParseError
from .flow import BoundingBox, FlowField
from .forest import Sample
from .pose import RawPose


def _clean_lines(path) -> list[tuple[int, str]]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            text = raw.split("#", 1)[0].strip()
            if text:
                out.append((lineno, text))
    return out


def _fmt(x: float) -> str:
    return repr(float(x))


# ---------------------------------------------------------------------------
# Flow tracks
# ---------------------------------------------------------------------------

def read_flow_track(path) -> list[FlowField]:
    path = str(path)
    lines = _clean_lines(path)
    if not lines:
        raise ParseError("empty flow track file", path=path)
    lineno, header = lines[0]
    tok = header.split()
    if len(tok) != 5 or tok[0] != "FLOWTRACK" or tok[1] != "1":
        raise ParseError("expected header 'FLOWTRACK 1 <frames> <width> <height>'",
                         path=path, line=lineno)
    try:
        frames, width, height = (int(t) for t in tok[2:])
    except ValueError:
        raise ParseError("non-integer header field", path=path, line=lineno) from None
    if frames < 1 or width < 1 or height < 1:
        raise ParseError("frames, width and height must be positive", path=path, line=lineno)

    per = width * height
    fields = []
    idx = 1
    for f in range(frames):
        if idx >= len(lines):
            raise ParseError(f"missing FRAME {f} block", path=path, line=lines[-1][0])
        lineno, text = lines[idx]
        tok = text.split()
        if len(tok) != 2 or tok[0] != "FRAME":
            raise ParseError(f"expected 'FRAME {f}', got {text!r}", path=path, line=lineno)
        if tok[1] != str(f):
            raise ParseError(f"expected frame index {f}, got {tok[1]}", path=path, line=lineno)
        block = lines[idx + 1 : idx + 1 + per]
        if len(block) < per:
            raise ParseError(f"frame {f} needs {per} vector lines, found {len(block)}",
                             path=path, line=lines[-1][0])

        def pairs():
            for ln, vec_text in block:
                parts = vec_text.split()
                if len(parts) != 2:
                    raise ParseError(f"expected 'u v', got {len(parts)} fields",
                                     path=path, line=ln)
                try:
                    yield float(parts[0])
                    yield float(parts[1])
                except ValueError:
                    raise ParseError(f"non-numeric flow component in frame {f}",
                                     path=path, line=ln) from None

        arr = np.fromiter(pairs(), dtype=np.float64, count=2 * per).reshape(per, 2)
        if not np.all(np.isfinite(arr)):
            raise ParseError(f"frame {f} contains non-finite flow values",
                             path=path, line=block[0][0])
        fields.append(FlowField(arr[:, 0].reshape(height, width),
                                arr[:, 1].reshape(height, width)))
        idx += 1 + per
    if idx != len(lines):
        raise ParseError("trailing content after the last frame",
                         path=path, line=lines[idx][0])
    return fields


def write_flow_track(path, fields) -> None:
    fields = list(fields)
    if not fields:
        raise ValueError("cannot write an empty flow track")
    height, width = fields[0].height, fields[0].width
    chunks = [f"FLOWTRACK 1 {len(fields)} {width} {height}"]
    for f, field in enumerate(fields):
        if field.height != height or field.width != width:
            raise ValueError("all flow frames must share one grid size")
        chunks.append(f"FRAME {f}")
        u = field.u.ravel()
        v = field.v.ravel()
        chunks.append("\n".join(f"{a:.9g} {b:.9g}" for a, b in zip(u, v)))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(chunks) + "\n")


# ---------------------------------------------------------------------------
# Pose tracks
# ---------------------------------------------------------------------------

def read_pose_track(path) -> tuple[int, list[list[RawPose]]]:
    """Returns (n_frames, per-frame candidate lists). A pose's score is
    the mean of its per-joint scores."""
    path = str(path)
    lines = _clean_lines(path)
    if not lines:
        raise ParseError("empty pose track file", path=path)
    lineno, header = lines[0]
    tok = header.split()
    if len(tok) != 4 or tok[0] != "POSETRACK" or tok[1] != "1":
        raise ParseError("expected header 'POSETRACK 1 <frames> <joints>'",
                         path=path, line=lineno)
    try:
        frames, joints = int(tok[2]), int(tok[3])
    except ValueError:
        raise ParseError("non-integer header field", path=path, line=lineno) from None
    if frames < 1 or joints < 1:
        raise ParseError("frames and joints must be positive", path=path, line=lineno)

    candidates: list[list[RawPose]] = [[] for _ in range(frames)]
    idx = 1
    while idx < len(lines):
        lineno, text = lines[idx]
        tok = text.split()
        if len(tok) != 2 or tok[0] != "FRAME":
            raise ParseError(f"expected 'FRAME <idx>', got {text!r}", path=path, line=lineno)
        try:
            f = int(tok[1])
        except ValueError:
            raise ParseError("non-integer frame index", path=path, line=lineno) from None
        if not 0 <= f < frames:
            raise ParseError(f"frame index {f} outside 0..{frames - 1}",
                             path=path, line=lineno)
        block = lines[idx + 1 : idx + 1 + joints]
        if len(block) < joints:
            raise ParseError(f"pose block for frame {f} needs {joints} joint lines",
                             path=path, line=lines[-1][0])
        coords = np.empty((joints, 2))
        scores = np.empty(joints)
        for j, (ln, joint_text) in enumerate(block):
            parts = joint_text.split()
            if len(parts) != 3:
                raise ParseError(f"expected 'x y score', got {len(parts)} fields",
                                 path=path, line=ln)
            try:
                coords[j, 0] = float(parts[0])
                coords[j, 1] = float(parts[1])
                scores[j] = float(parts[2])
            except ValueError:
                raise ParseError("non-numeric joint field", path=path, line=ln) from None
        if not (np.all(np.isfinite(coords)) and np.all(np.isfinite(scores))):
            raise ParseError(f"non-finite joint values in frame {f}",
                             path=path, line=block[0][0])
        candidates[f].append(RawPose(coords, float(scores.mean())))
        idx += 1 + joints
    return frames, candidates


def write_pose_track(path, frame_candidates, n_joints: int) -> None:
    out = [f"POSETRACK 1 {len(frame_candidates)} {n_joints}"]
    for f, cands in enumerate(frame_candidates):
        for pose in cands:
            if pose.joints.shape[0] != n_joints:
                raise ValueError(f"pose in frame {f} has {pose.joints.shape[0]} joints, "
                                 f"expected {n_joints}")
            out.append(f"FRAME {f}")
            score = f"{pose.score:.9g}"
            out.extend(f"{x:.9g} {y:.9g} {score}" for x, y in pose.joints)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(out) + "\n")


# ---------------------------------------------------------------------------
# Box tracks
# ---------------------------------------------------------------------------

def read_boxes(path) -> list[BoundingBox]:
    """Dense per-frame boxes; gaps between annotated frames are filled
    by linear interpolation (edges copy the nearest annotation)."""
    path = str(path)
    lines = _clean_lines(path)
    if not lines:
        raise ParseError("empty boxes file", path=path)
    lineno, header = lines[0]
    tok = header.split()
    if len(tok) != 3 or tok[0] != "BOXES" or tok[1] != "1":
        raise ParseError("expected header 'BOXES 1 <frames>'", path=path, line=lineno)
    try:
        frames = int(tok[2])
    except ValueError:
        raise ParseError("non-integer frame count", path=path, line=lineno) from None
    if frames < 1:
        raise ParseError("frame count must be positive", path=path, line=lineno)

    seen: dict[int, tuple[float, float, float, float]] = {}
    for lineno, text in lines[1:]:
        parts = text.split()
        if len(parts) != 5:
            raise ParseError(f"expected 'frame x y w h', got {len(parts)} fields",
                             path=path, line=lineno)
        try:
            f = int(parts[0])
            vals = tuple(float(p) for p in parts[1:])
        except ValueError:
            raise ParseError("non-numeric box field", path=path, line=lineno) from None
        if not 0 <= f < frames:
            raise ParseError(f"frame index {f} outside 0..{frames - 1}", path=path, line=lineno)
        if f in seen:
            raise ParseError(f"duplicate box for frame {f}", path=path, line=lineno)
        if vals[2] <= 0 or vals[3] <= 0:
            raise ParseError("box width and height must be positive", path=path, line=lineno)
        seen[f] = vals
    if not seen:
        raise ParseError("boxes file has no records", path=path)

    known = sorted(seen)
    ts = np.arange(frames, dtype=np.float64)
    kts = np.asarray(known, dtype=np.float64)
    dense = np.empty((frames, 4))
    for c in range(4):
        dense[:, c] = np.interp(ts, kts, [seen[f][c] for f in known])
    return [BoundingBox(x, y, w, h, frame=f) for f, (x, y, w, h) in enumerate(dense)]


def write_boxes(path, boxes, n_frames: int | None = None) -> None:
    boxes = list(boxes)
    if not boxes:
        raise ValueError("cannot write an empty boxes file")
    frames = n_frames if n_frames is not None else max(b.frame for b in boxes) + 1
    out = [f"BOXES 1 {frames}"]
    out.extend(f"{b.frame} {b.x:.9g} {b.y:.9g} {b.w:.9g} {b.h:.9g}" for b in boxes)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(out) + "\n")


# ---------------------------------------------------------------------------
# Dataset manifests
# ---------------------------------------------------------------------------

NO_FILE = "-"


@dataclass(frozen=True)
class ActionClip:
    """One dataset record; paths are stored as written in the manifest."""

    clip_id: str
    actor: str
    scenario: str
    label: str
    flow_path: str
    pose_path: str
    boxes_path: str


@dataclass
class DatasetManifest:
    labels: tuple
    scenarios: tuple
    clips: list
    root: Path
    fps: float = 25.0

    @property
    def actors(self) -> tuple:
        return tuple(sorted({c.actor for c in self.clips}))

    def resolve(self, rel: str) -> Path:
        return self.root / rel


def read_manifest(path, check_files: bool = True) -> DatasetManifest:
    path = Path(path)
    lines = _clean_lines(path)
    labels: tuple = ()
    scenarios: tuple = ()
    fps = 25.0
    clips: list[ActionClip] = []
    ids = set()
    root = path.parent
    for lineno, text in lines:
        parts = text.split()
        key = parts[0].upper()
        if key == "LABELS":
            labels = tuple(parts[1:])
            continue
        if key == "SCENARIOS":
            scenarios = tuple(parts[1:])
            continue
        if key == "FPS":
            try:
                fps = float(parts[1])
            except (IndexError, ValueError):
                raise ParseError("FPS needs one numeric value",
                                 path=str(path), line=lineno) from None
            continue
        if not labels or not scenarios:
            raise ParseError("LABELS and SCENARIOS must precede clip records",
                             path=str(path), line=lineno)
        if len(parts) != 7:
            raise ParseError("expected 'clip_id actor scenario label flow pose boxes'",
                             path=str(path), line=lineno)
        clip_id, actor, scenario, label, flow_p, pose_p, boxes_p = parts
        if clip_id in ids:
            raise ParseError(f"duplicate clip_id {clip_id!r}", path=str(path), line=lineno)
        if scenario not in scenarios:
            raise ParseError(f"unknown scenario {scenario!r}", path=str(path), line=lineno)
        if label not in labels:
            raise ParseError(f"unknown label {label!r}", path=str(path), line=lineno)
        if check_files:
            for p in (flow_p, pose_p, boxes_p):
                if p != NO_FILE and not (root / p).exists():
                    raise ParseError(f"referenced file does not exist: {p}",
                                     path=str(path), line=lineno)
        ids.add(clip_id)
        clips.append(ActionClip(clip_id, actor, scenario, label, flow_p, pose_p, boxes_p))
    if not labels or not scenarios:
        raise ParseError("manifest needs LABELS and SCENARIOS header lines", path=str(path))
    return DatasetManifest(labels=labels, scenarios=scenarios, clips=clips, root=root, fps=fps)


def write_manifest(path, manifest: DatasetManifest) -> None:
    out = [
        "LABELS " + " ".join(manifest.labels),
        "SCENARIOS " + " ".join(manifest.scenarios),
        f"FPS {manifest.fps:g}",
    ]
    out.extend(
        f"{c.clip_id} {c.actor} {c.scenario} {c.label} {c.flow_path} {c.pose_path} {c.boxes_path}"
        for c in manifest.clips)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(out) + "\n")


# ---------------------------------------------------------------------------
# Feature files
# ---------------------------------------------------------------------------

def read_features(path) -> tuple[list[Sample], int]:
    path = str(path)
    lines = _clean_lines(path)
    if not lines:
        raise ParseError("empty feature file", path=path)
    lineno, header = lines[0]
    tok = header.split()
    if len(tok) < 4 or tok[0] != "FEATURES" or tok[1] != "1":
        raise ParseError("expected header 'FEATURES 1 <n> <names...>'", path=path, line=lineno)
    try:
        n = int(tok[2])
    except ValueError:
        raise ParseError("non-integer component count", path=path, line=lineno) from None
    names = tuple(tok[3:])
    if len(set(names)) != len(names):
        raise ParseError("duplicate feature names in header", path=path, line=lineno)
    name_set = set(names)

    samples: list[Sample] = []
    idx = 1
    per = len(names)
    while idx < len(lines):
        lineno, text = lines[idx]
        parts = text.split()
        if len(parts) not in (2, 3, 4):
            raise ParseError("expected 'clip_id label [actor [scenario]]'",
                             path=path, line=lineno)
        clip_id, label = parts[0], parts[1]
        actor = parts[2] if len(parts) >= 3 else None
        scenario = parts[3] if len(parts) == 4 else None
        block = lines[idx + 1 : idx + 1 + per]
        if len(block) < per:
            raise ParseError(f"sample {clip_id!r} needs {per} feature lines",
                             path=path, line=lines[-1][0])
        features: dict = {}
        for ln, feat_text in block:
            ftok = feat_text.split()
            if len(ftok) != 1 + n:
                raise ParseError(f"feature line needs a name and {n} values, got "
                                 f"{len(ftok) - 1}", path=path, line=ln)
            fname = ftok[0]
            if fname not in name_set:
                raise ParseError(f"unknown feature name {fname!r}", path=path, line=ln)
            if fname in features:
                raise ParseError(f"duplicate feature {fname!r} for sample {clip_id!r}",
                                 path=path, line=ln)
            try:
                vec = np.array([float(x) for x in ftok[1:]])
            except ValueError:
                raise ParseError("non-numeric feature value", path=path, line=ln) from None
            if not np.all(np.isfinite(vec)) or np.any(vec < 0):
                raise ParseError(f"feature {fname!r} must be finite and nonnegative",
                                 path=path, line=ln)
            features[fname] = vec
        features = {name: features[name] for name in names}
        samples.append(Sample(clip_id=clip_id, label=label, features=features,
                              actor=actor, scenario=scenario))
        idx += 1 + per
    return samples, n


def write_features(path, samples, n: int) -> None:
    samples = list(samples)
    if not samples:
        raise ValueError("cannot write an empty feature file")
    names = tuple(samples[0].features)
    name_set = set(names)
    out = [f"FEATURES 1 {n} " + " ".join(names)]
    for s in samples:
        if set(s.features) != name_set:
            raise ValueError(f"sample {s.clip_id!r} has a different feature-name set")
        head = f"{s.clip_id} {s.label}"
        if s.actor is not None:
            head += f" {s.actor}"
            if s.scenario is not None:
                head += f" {s.scenario}"
        out.append(head)
        for name in names:
            vec = np.asarray(s.features[name], dtype=np.float64)
            if vec.shape != (n,):
                raise ValueError(f"feature {name!r} of {s.clip_id!r} has shape {vec.shape}, "
                                 f"expected ({n},)")
            out.append(name + " " + " ".join(_fmt(x) for x in vec))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(out) + "\n")
