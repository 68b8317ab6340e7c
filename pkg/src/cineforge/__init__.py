"""Compile film scene descriptors and a room scan into a timed augmentation manifest."""

from .analyzer import MockAnalysisProvider, analyze_clip, clip_hash, probe_duration
from .descriptors import Feature, FeatureDocument, parse_feature_document, serialize_document, validate_document
from .planner import AugmentationPlan, ClipInfo, build_plan
from .playback import export_manifest, load_manifest, simulate
from .prompts import assemble_prompt
from .room import load_detailed_scan, load_simple_scan, placement_zones, tile_surface
from .timeline import active_at, merge, normalize

__version__ = "0.1.0"

__all__ = [
    "AugmentationPlan",
    "ClipInfo",
    "Feature",
    "FeatureDocument",
    "MockAnalysisProvider",
    "active_at",
    "analyze_clip",
    "assemble_prompt",
    "build_plan",
    "clip_hash",
    "export_manifest",
    "load_detailed_scan",
    "load_manifest",
    "load_simple_scan",
    "merge",
    "normalize",
    "parse_feature_document",
    "placement_zones",
    "probe_duration",
    "serialize_document",
    "simulate",
    "tile_surface",
    "validate_document",
]
