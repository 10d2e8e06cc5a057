"""Vision front-end for the mosgnn engine.

Runs instance segmentation and optical flow over video frames, assembles a
930-dimensional feature vector per detected instance, assigns labels from
ground-truth masks, and writes the engine's node-feature file format.
"""

__version__ = "0.1.0"

from .cdnet import VideoDir, default_groups_path, discover_videos, load_groups
from .export import export
from .features import (FEATURE_DIM, FEATURE_LAYOUT, RECIPE_VERSION,
                       compute_features, compute_flow, feature_slices)
from .labels import assign_labels
from .pipeline import extract_instances, process_video
from .records import InstanceRecord
from .segmenters import BlobSegmenter, Detection, MaskRCNNSegmenter, make_segmenter
