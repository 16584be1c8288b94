"""Synthetic desk-scale dataset generator.

Each class is a periodic motion with its own base frequency (cycles per
clip): the flow field inside the bounding box rotates and pulses at
that frequency, and the skeleton's arms and legs swing at it too.
Actors modulate the signal (a fixed phase and a small rate jitter per
actor, so held-out actors differ from the training ones), and scenarios
add per-pixel noise and amplitude scaling of increasing severity, which
gives the robustness protocol something to measure. Everything is
deterministic for a fixed seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dataio import (
    ActionClip,
    DatasetManifest,
    write_boxes,
    write_flow_track,
    write_manifest,
    write_pose_track,
)
from .flow import BoundingBox, FlowField, partition_bbox, rasterize_layout
from .pose import JOINT_INDEX, N_RAW_JOINTS, RawPose, default_joint_map

# (noise sigma as a fraction of the flow amplitude, amplitude jitter):
# s1 is clean, s4 mildly degraded, s3 noisier, s2 hardest (strong
# amplitude variation on top of noise).
DEFAULT_SCENARIO_LEVELS = {
    "s1": (0.00, 0.00),
    "s2": (1.10, 0.45),
    "s3": (0.75, 0.25),
    "s4": (0.45, 0.12),
}

_REGION_GAIN = np.array([0.4, 0.9, 0.9, 1.3, 1.3])


@dataclass
class SynthConfig:
    """Shape and difficulty of the generated dataset."""

    classes: int = 6
    actors: int = 5
    clips_per: int = 1          # clips per class per actor per scenario
    frames: int = 64
    width: int = 12             # flow grid size in pixels
    height: int = 16
    base_frequencies: tuple = ()   # cycles/clip per class; default 3, 4, ...
    amplitudes: tuple = ()         # flow amplitude per class; default ~1
    scenario_levels: dict = field(default_factory=lambda: dict(DEFAULT_SCENARIO_LEVELS))
    seed: int = 0

    def __post_init__(self):
        if min(self.classes, self.actors, self.clips_per) < 1:
            raise ValueError("classes, actors and clips_per must all be >= 1")
        if self.frames < 2:
            raise ValueError("frames must be >= 2")
        if not self.base_frequencies:
            self.base_frequencies = tuple(float(3 + i) for i in range(self.classes))
        if not self.amplitudes:
            self.amplitudes = tuple(1.0 + 0.05 * i for i in range(self.classes))
        if len(self.base_frequencies) != self.classes or len(self.amplitudes) != self.classes:
            raise ValueError("need one base frequency and amplitude per class")
        if len(set(self.base_frequencies)) != self.classes:
            raise ValueError(f"class base frequencies must be distinct: {self.base_frequencies}")
        if not self.scenario_levels:
            raise ValueError("at least one scenario is required")

    @property
    def labels(self) -> tuple:
        return tuple(f"f{f:g}" for f in self.base_frequencies)

    @property
    def scenarios(self) -> tuple:
        return tuple(self.scenario_levels)


# Relative skeleton within the box (x, y in box fractions). Limb joints
# are animated around these anchors.
_BASE_JOINTS = {
    "head": (0.50, 0.08),
    "neck": (0.50, 0.18),
    "torso": (0.50, 0.42),
    "left_shoulder": (0.38, 0.20),
    "right_shoulder": (0.62, 0.20),
    "left_hip": (0.42, 0.55),
    "right_hip": (0.58, 0.55),
}

_ARM_LEN = 0.16
_FOREARM_LEN = 0.16


def _skeleton(phase: float, swing: float, leg_swing: float) -> np.ndarray:
    """15-joint skeleton (box-fraction coordinates) at one time point.

    ``swing`` is the arm angle offset from rest (radians), ``leg_swing``
    the horizontal leg displacement; left and right limbs move in
    opposite phase.
    """
    j = np.zeros((15, 2))
    for name, xy in _BASE_JOINTS.items():
        j[JOINT_INDEX[name]] = xy

    for side, sign, arm_phase in (("left", -1.0, 0.0), ("right", 1.0, math.pi)):
        sh = np.asarray(_BASE_JOINTS[f"{side}_shoulder"])
        upper = 0.25 + swing * math.sin(phase + arm_phase)
        fore = 0.35 + 1.5 * swing * math.sin(phase + arm_phase + 0.7)
        elbow = sh + _ARM_LEN * np.array([sign * math.sin(upper), math.cos(upper)])
        hand = elbow + _FOREARM_LEN * np.array([sign * math.sin(fore), math.cos(fore)])
        j[JOINT_INDEX[f"{side}_elbow"]] = elbow
        j[JOINT_INDEX[f"{side}_hand"]] = hand

    for side, leg_phase in (("left", 0.0), ("right", math.pi)):
        hip = np.asarray(_BASE_JOINTS[f"{side}_hip"])
        dx = leg_swing * math.sin(phase + leg_phase)
        j[JOINT_INDEX[f"{side}_knee"]] = hip + np.array([0.6 * dx, 0.20])
        j[JOINT_INDEX[f"{side}_foot"]] = hip + np.array([dx, 0.40])
    return j


def _raw_from_skeleton(joints15: np.ndarray, joint_map) -> np.ndarray:
    """Raw 26-joint array whose mapped average reproduces joints15."""
    raw = np.zeros((N_RAW_JOINTS, 2))
    for name, sources in joint_map.sources.items():
        for src in sources:
            raw[src] = joints15[JOINT_INDEX[name]]
    return raw


def synth_generate(config: SynthConfig, out_dir) -> DatasetManifest:
    """Write flow/pose/box files plus a manifest under ``out_dir`` and
    return the loaded-equivalent manifest."""
    out = Path(out_dir)
    for sub in ("flow", "pose", "boxes"):
        (out / sub).mkdir(parents=True, exist_ok=True)

    joint_map = default_joint_map()
    labels = config.labels
    scenarios = config.scenarios
    frames = config.frames
    clips: list[ActionClip] = []

    for ai in range(config.actors):
        actor_rng = np.random.default_rng((config.seed, 101, ai))
        actor_phase = actor_rng.uniform(0.0, 2.0 * math.pi)
        actor_rate = 1.0 + actor_rng.uniform(-0.02, 0.02)
        for ci in range(config.classes):
            for si, scen in enumerate(scenarios):
                sigma, amp_jitter = config.scenario_levels[scen]
                for rep in range(config.clips_per):
                    rng = np.random.default_rng((config.seed, ci, ai, si, rep))
                    clip_id = f"{labels[ci]}_a{ai + 1}_{scen}_r{rep}"
                    _write_clip(out, clip_id, config, joint_map,
                                freq=config.base_frequencies[ci] * actor_rate,
                                amp=config.amplitudes[ci],
                                phase=actor_phase + rng.uniform(0.0, 0.4),
                                sigma=sigma, amp_jitter=amp_jitter, rng=rng)
                    clips.append(ActionClip(
                        clip_id=clip_id, actor=str(ai + 1), scenario=scen,
                        label=labels[ci],
                        flow_path=f"flow/{clip_id}.flow",
                        pose_path=f"pose/{clip_id}.pose",
                        boxes_path=f"boxes/{clip_id}.box"))

    manifest = DatasetManifest(labels=labels, scenarios=scenarios, clips=clips,
                               root=out, fps=25.0)
    write_manifest(out / "manifest.txt", manifest)
    return manifest


def _write_clip(out: Path, clip_id: str, config: SynthConfig, joint_map,
                freq: float, amp: float, phase: float,
                sigma: float, amp_jitter: float, rng) -> None:
    frames = config.frames
    width, height = config.width, config.height

    scale = amp * (1.0 + amp_jitter * rng.uniform(-1.0, 1.0))
    scale = max(scale, 0.1 * amp)

    bw, bh = width - 2.0, height - 2.0
    box = BoundingBox(rng.uniform(0.5, 1.5), rng.uniform(0.5, 1.5), bw, bh)
    grid = rasterize_layout(partition_bbox(box), width, height)
    gain = np.where(grid >= 0, _REGION_GAIN[np.clip(grid, 0, None)], 0.0)
    inside = grid >= 0

    flow_fields = []
    pose_frames = []
    swing = 0.55 * scale / amp
    leg_swing = 0.12 * scale / amp
    for t in range(frames):
        ang = 2.0 * math.pi * freq * t / frames + phase
        mag = scale * (1.1 + 0.5 * math.sin(ang))
        u = gain * (mag * math.cos(ang))
        v = gain * (mag * math.sin(ang))
        if sigma > 0.0:
            u = u + inside * rng.normal(0.0, sigma * amp, size=(height, width))
            v = v + inside * rng.normal(0.0, sigma * amp, size=(height, width))
        flow_fields.append(FlowField(u, v))

        joints = _skeleton(ang, swing, leg_swing)
        joints = joints * np.array([bw, bh]) + np.array([box.x, box.y])
        if sigma > 0.0:
            joints = joints + rng.normal(0.0, 0.6 * sigma, size=joints.shape)
        raw = _raw_from_skeleton(joints, joint_map)
        score = 0.8 + rng.uniform(0.0, 0.15)
        pose_frames.append([RawPose(raw, score)])

    write_flow_track(out / f"flow/{clip_id}.flow", flow_fields)
    write_pose_track(out / f"pose/{clip_id}.pose", pose_frames, N_RAW_JOINTS)
    boxes = [BoundingBox(box.x, box.y, box.w, box.h, frame=t) for t in range(frames)]
    write_boxes(out / f"boxes/{clip_id}.box", boxes, n_frames=frames)
