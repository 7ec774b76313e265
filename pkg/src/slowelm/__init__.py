"""Pose-invariant object recognition on event-camera streams with a slow-feature ELM."""

from .config import RunConfig, load_config
from .elm import (
    FastPredictor,
    SlowElmModel,
    fit_output,
    fit_projection,
    init_hidden,
    load_model,
    save_model,
)
from .events import EventStream, parse_event_stream, serialize_event_stream, window_by_count
from .pipeline import Dataset, FeatureParams, train
from .pose import PoseLabel, pose_bin, vote
from .roi import RoiBox, RoiTracker, estimate_spatial_roi
from .synth import RigConfig, SuiteConfig, default_shapes, generate_recording, generate_suite

__version__ = "0.1.0"
