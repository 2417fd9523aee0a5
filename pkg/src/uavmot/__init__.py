"""Multi-modal multi-UAV tracking: association cascade, evaluation, simulation."""

from .core import BBox, Detection, EventFrame, Modality, MotionEmbedding, Track, TrackStatus
from .distance import AssociationThresholds
from .kalman import KalmanConfig, KalmanFilter, KalmanState
from .metrics import GroundTruth, GTObject, MetricReport, evaluate
from .simulator import ScenarioConfig, classify_attributes, generate
from .tracker import MMASortTracker, TrackerConfig, run_sequence

__version__ = "0.1.0"
