"""End-to-end feature extraction, experiment protocol and evaluation.

Ties the modules together: load a clip's flow/pose/box files, derive
the 31 flow and 15 pose series, map every series through the spectral
descriptor, and classify with the frequency forest. The experiment
protocol partitions clips by actor (no actor appears on both sides) and
optionally restricts train and test sides to scenario subsets, with
repeated runs under derived seeds.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .dataio import ActionClip, DatasetManifest, read_boxes, read_flow_track, read_pose_track
from .errors import DataError, ParseError
from .flow import FLOW_FEATURE_NAMES, flow_feature_series
from .forest import Forest, ForestParams, Sample, train_forest
from .pose import (
    N_RAW_JOINTS,
    POSE_FEATURE_NAMES,
    JointMap,
    Pose15,
    PoseTrack,
    convert_pose,
    default_joint_map,
    pose_feature_series,
    select_best_pose,
)
from .spectral import DEFAULT_COMPONENTS, DEFAULT_SMOOTHING_WINDOW, frequency_feature

ALL_FEATURE_NAMES = FLOW_FEATURE_NAMES + POSE_FEATURE_NAMES


@dataclass
class ClipData:
    """Per-frame aligned raw inputs of one clip."""

    flows: list
    pose_candidates: list
    boxes: list


def load_clip_data(clip: ActionClip, root) -> ClipData:
    """Read and align a clip's three files; their frame counts must
    agree."""
    flows = read_flow_track(root / clip.flow_path)
    pose_frames, candidates = read_pose_track(root / clip.pose_path)
    boxes = read_boxes(root / clip.boxes_path)
    if not (len(flows) == pose_frames == len(boxes)):
        raise ParseError(
            f"clip {clip.clip_id!r}: frame counts disagree "
            f"(flow {len(flows)}, pose {pose_frames}, boxes {len(boxes)})")
    return ClipData(flows=flows, pose_candidates=candidates, boxes=boxes)


def clip_features(data: ClipData, joint_map: JointMap,
                  n: int = DEFAULT_COMPONENTS,
                  window: int = DEFAULT_SMOOTHING_WINDOW) -> dict[str, np.ndarray]:
    """The 46 named frequency features of one clip.

    Flow series come straight from the per-frame directional statistics;
    the pose track keeps, per frame, the best-fitting candidate for the
    frame's box (26-joint candidates are reduced through the joint map,
    15-joint ones are taken as-is).
    """
    series = flow_feature_series(data.flows, data.boxes)

    frames = []
    for f, box in enumerate(data.boxes):
        best = select_best_pose(data.pose_candidates[f], box)
        if best is None:
            frames.append(None)
        elif best.joints.shape[0] == N_RAW_JOINTS:
            frames.append(convert_pose(best, joint_map))
        else:
            frames.append(Pose15(best.joints))
    series.update(pose_feature_series(PoseTrack(frames), window))

    return {name: frequency_feature(series[name], n) for name in ALL_FEATURE_NAMES}


def extract_sample(clip: ActionClip, manifest: DatasetManifest, joint_map: JointMap,
                   n: int = DEFAULT_COMPONENTS,
                   window: int = DEFAULT_SMOOTHING_WINDOW) -> Sample:
    data = load_clip_data(clip, manifest.root)
    return Sample(clip_id=clip.clip_id, label=clip.label,
                  features=clip_features(data, joint_map, n, window),
                  actor=clip.actor, scenario=clip.scenario)


def extract_dataset(manifest: DatasetManifest, joint_map: JointMap | None = None,
                    n: int = DEFAULT_COMPONENTS,
                    window: int = DEFAULT_SMOOTHING_WINDOW) -> list[Sample]:
    """Extract every clip of a manifest, in manifest order.

    Per-clip extraction is pure and independent, so callers may shard
    the manifest and extract concurrently; this helper runs serially.
    """
    if joint_map is None:
        joint_map = default_joint_map()
    return [extract_sample(clip, manifest, joint_map, n, window) for clip in manifest.clips]


# ---------------------------------------------------------------------------
# Actor split and scenario protocol
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SplitConfig:
    """Disjoint train/test actor sets."""

    train_actors: frozenset
    test_actors: frozenset

    def __post_init__(self):
        object.__setattr__(self, "train_actors", frozenset(self.train_actors))
        object.__setattr__(self, "test_actors", frozenset(self.test_actors))
        if not self.train_actors or not self.test_actors:
            raise ValueError("both actor sets must be non-empty")
        overlap = self.train_actors & self.test_actors
        if overlap:
            raise ValueError(f"actor sets overlap: {sorted(overlap)}")


def split_by_actor(records, config: SplitConfig) -> tuple[list, list]:
    """Partition clip records (anything with an ``actor`` attribute) by
    actor membership. Every configured actor must occur in the data."""
    actors = {r.actor for r in records}
    unknown = (config.train_actors | config.test_actors) - actors
    if unknown:
        raise ValueError(f"actors not present in the dataset: {sorted(unknown)}")
    train = [r for r in records if r.actor in config.train_actors]
    test = [r for r in records if r.actor in config.test_actors]
    return train, test


def default_16_9_split(actors) -> SplitConfig:
    """The 16-train / 9-test actor partition for a 25-actor dataset:
    numeric-aware sort, first 16 actors train, last 9 test."""
    actors = sorted(set(actors), key=lambda a: (0, int(a)) if str(a).isdigit() else (1, str(a)))
    if len(actors) != 25:
        raise ValueError(f"the default 16/9 split needs exactly 25 actors, got {len(actors)}")
    return SplitConfig(train_actors=frozenset(map(str, actors[:16])),
                       test_actors=frozenset(map(str, actors[16:])))


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------

@dataclass
class ConfusionMatrix:
    """Row-normalized confusion matrix plus overall accuracy.

    ``counts[i, j]`` is the number of test samples with true label
    ``labels[i]`` predicted as ``labels[j]``. Rows without any test
    sample are flagged in ``zero_support_labels`` and skipped when the
    matrix is rendered.
    """

    labels: tuple
    counts: np.ndarray
    accuracy: float
    n_samples: int

    @property
    def support(self) -> np.ndarray:
        return self.counts.sum(axis=1)

    @property
    def zero_support_labels(self) -> tuple:
        return tuple(lab for lab, s in zip(self.labels, self.support) if s == 0)

    def rows(self) -> list[tuple[str, np.ndarray]]:
        """(label, proportions) for every row with support; each
        proportion row sums to 1."""
        out = []
        for i, lab in enumerate(self.labels):
            s = self.counts[i].sum()
            if s > 0:
                out.append((lab, self.counts[i] / s))
        return out

    def format_table(self) -> str:
        width = max(len("accuracy"), max((len(l) for l in self.labels), default=4)) + 2
        head = " " * width + "".join(f"{lab:>{width}}" for lab in self.labels)
        lines = [head]
        for lab, props in self.rows():
            lines.append(f"{lab:<{width}}" + "".join(f"{p:>{width}.2f}" for p in props))
        lines.append(f"accuracy {self.accuracy:.4f}  ({self.n_samples} samples)")
        if self.zero_support_labels:
            lines.append("no test support: " + " ".join(self.zero_support_labels))
        return "\n".join(lines)

    def to_structured(self) -> str:
        out = [f"CONFMAT 1 {len(self.labels)}", "labels " + " ".join(self.labels)]
        for lab, props in self.rows():
            out.append(f"row {lab} " + " ".join(repr(float(p)) for p in props))
        for lab in self.zero_support_labels:
            out.append(f"zero_support {lab}")
        out.append(f"accuracy {self.accuracy!r}")
        return "\n".join(out)


def evaluate(forest: Forest, samples, labels=None) -> ConfusionMatrix:
    """Predict every test sample and tabulate the confusion matrix.

    ``labels`` fixes the row/column vocabulary and order; by default it
    is the forest's label set extended by any unseen test labels.
    """
    samples = list(samples)
    if not samples:
        raise ValueError("cannot evaluate on an empty test set")
    if labels is None:
        extra = sorted({s.label for s in samples} - set(forest.labels))
        labels = tuple(forest.labels) + tuple(extra)
    labels = tuple(labels)
    index = {lab: i for i, lab in enumerate(labels)}
    counts = np.zeros((len(labels), len(labels)), dtype=np.int64)
    correct = 0
    for s in samples:
        if s.label not in index:
            raise ValueError(f"sample {s.clip_id!r} has label {s.label!r} "
                             f"outside the vocabulary")
        pred, _ = forest.predict(s.features)
        if pred not in index:
            raise ValueError(f"prediction {pred!r} outside the vocabulary")
        counts[index[s.label], index[pred]] += 1
        correct += int(pred == s.label)
    return ConfusionMatrix(labels=labels, counts=counts,
                           accuracy=correct / len(samples), n_samples=len(samples))


# ---------------------------------------------------------------------------
# Scenario-mixing experiment
# ---------------------------------------------------------------------------

@dataclass
class ExperimentResult:
    train_scenarios: tuple
    test_scenarios: tuple
    accuracies: list = field(default_factory=list)
    matrices: list = field(default_factory=list)

    @property
    def mean_accuracy(self) -> float:
        return float(np.mean(self.accuracies))


def scenario_experiment(samples, split: SplitConfig, train_scenarios, test_scenarios,
                        params: ForestParams | None = None, runs: int = 3,
                        labels=None, scenario_vocabulary=None) -> ExperimentResult:
    """Train on train-actor clips from the train scenarios, test on
    test-actor clips from the test scenarios, repeated ``runs`` times
    with seeds derived from the base seed (base + run index).

    Feature extraction is deterministic, so runs differ only through
    the forests' random pivot choices.
    """
    if params is None:
        params = ForestParams()
    train_scenarios = frozenset(train_scenarios)
    test_scenarios = frozenset(test_scenarios)
    if not train_scenarios or not test_scenarios:
        raise ValueError("scenario sets must be non-empty")
    if scenario_vocabulary is not None:
        vocab = set(scenario_vocabulary)
        unknown = (train_scenarios | test_scenarios) - vocab
        if unknown:
            raise ValueError(f"unknown scenarios: {sorted(unknown)}")
    samples = list(samples)
    for s in samples:
        if s.actor is None or s.scenario is None:
            raise ValueError(f"sample {s.clip_id!r} lacks actor/scenario metadata")
    if runs < 1:
        raise ValueError(f"runs must be >= 1, got {runs}")

    train_all, test_all = split_by_actor(samples, split)
    train = [s for s in train_all if s.scenario in train_scenarios]
    test = [s for s in test_all if s.scenario in test_scenarios]
    if not train:
        raise DataError("no training clips match the actor/scenario selection")
    if not test:
        raise DataError("no test clips match the actor/scenario selection")

    result = ExperimentResult(train_scenarios=tuple(sorted(train_scenarios)),
                              test_scenarios=tuple(sorted(test_scenarios)))
    for run in range(runs):
        run_params = replace(params, seed=params.seed + run)
        forest = train_forest(train, run_params)
        matrix = evaluate(forest, test, labels=labels)
        result.accuracies.append(matrix.accuracy)
        result.matrices.append(matrix)
    return result
