"""Frequency-domain motion features and a metric-tree forest classifier.

Scalar per-frame series (directional optical-flow statistics over body
subregions, articulated-pose displacements and angles) are converted to
power-spectrum descriptors and classified by a forest of entropy-split
metric trees with one tree per feature.
"""

from .errors import DataError, ParseError
from .flow import (
    BoundingBox,
    FLOW_FEATURE_NAMES,
    FlowField,
    FlowStats,
    SubregionLayout,
    bin_direction,
    flow_feature_series,
    flow_stats,
    partition_bbox,
)
from .forest import (
    Forest,
    ForestParams,
    FrequencyTree,
    Sample,
    entropy_bits,
    load_forest,
    save_forest,
    train_forest,
    tree_vote,
)
from .kernels import COMPILED as COMPILED_KERNELS
from .pipeline import (
    ConfusionMatrix,
    SplitConfig,
    clip_features,
    default_16_9_split,
    evaluate,
    extract_dataset,
    load_clip_data,
    scenario_experiment,
    split_by_actor,
)
from .pose import (
    JointMap,
    POSE_FEATURE_NAMES,
    Pose15,
    PoseTrack,
    RawPose,
    convert_pose,
    default_joint_map,
    load_joint_map,
    pose_feature_series,
    select_best_pose,
    standardize_pose,
)
from .spectral import frequency_feature, power_spectrum, recycle, smooth
from .synth import SynthConfig, synth_generate

__version__ = "0.1.0"
