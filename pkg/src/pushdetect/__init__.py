"""pushdetect: moderate-violence (pushing) detection from keypoint streams.

Pipeline: keypoint frames -> track ids -> angle features -> two-person
gating -> random forest -> per-frame and per-clip decisions.
"""

__version__ = "0.1.0"

from .errors import (
    ClipFormatError,
    ConfigError,
    DegenerateGeometryError,
    ModelFormatError,
    PushDetectError,
    SequencingError,
    SplitError,
    TrainingError,
)
from .evaluation import (
    ClipDecisionConfig,
    ConfusionMatrix,
    EvalReport,
    PipelineConfig,
    SplitSpec,
    confusion,
    decide_clip,
    evaluate_model,
    normalize_rows,
    precision_recall,
    split_clips,
)
from .forest import ForestModel, ForestParams, fit, gini, load, predict, predict_proba, save
from .interaction import GateConfig, PairSample, build_pair_samples, gate_pairs
from .kinematics import (
    FEATURE_NAMES,
    FeatureVector,
    KinematicsConfig,
    extract_features,
    joint_angle,
    quad_angles,
    torso_inclination,
)
from .skeleton import (
    ClipRecord,
    FrameDetections,
    Keypoint,
    Label,
    Skeleton,
    parse_clip,
    serialize_clip,
)
from .synth import GroundTruth, ScenarioParams, gen_clip, gen_corpus
from .tracker import IouTracker, Track, TrackerConfig, iou, track_clip
