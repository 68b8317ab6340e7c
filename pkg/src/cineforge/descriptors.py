"""Typed scene-descriptor documents produced by the analysis provider.

One document per feature kind. Each is a JSON array of segments, each segment
holding ``timestamp_start``/``timestamp_end`` (seconds) and one payload object
under a feature-specific key.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Union

from . import canonical
from .errors import (
    DescriptorSyntaxError,
    EnumError,
    IntervalError,
    SchemaError,
    ValidationFailure,
)


class Feature(str, Enum):
    PARTICLES = "particles"
    OBJECTS = "objects"
    TEXTURES = "textures"
    CHARACTERS = "characters"
    BODY = "body"
    WINDOW = "window"
    LIGHTING = "lighting"
    EFFECTIVE_LIGHT = "effective_light"

    @property
    def order(self) -> int:
        return FEATURE_ORDER.index(self)


FEATURE_ORDER: tuple[Feature, ...] = tuple(Feature)

PAYLOAD_KEY: dict[Feature, str] = {
    Feature.PARTICLES: "atmospheric_particle",
    Feature.OBJECTS: "surrounding_object",
    Feature.TEXTURES: "Contexts",
    Feature.CHARACTERS: "surrounding_character",
    Feature.BODY: "user_character",
    Feature.WINDOW: "Contexts",
    Feature.LIGHTING: "lighting_and_color",
    Feature.EFFECTIVE_LIGHT: "effective_light",
}

PARTICLE_TYPES = ("rain", "snow", "dust", "smoke", "fog")
PARTICLE_DENSITIES = ("sparse", "moderate", "dense", "torrential")
OBJECT_POSITIONS = ("on_the_floor", "in_the_air")
QUANTITIES = ("a_few", "several", "many", "countless")
MOTION_PATTERNS = ("static", "to_user", "away_from_user", "chaotic", "falling")
CHARACTER_MOTIONS = ("moving", "static")
BRIGHTNESS_LEVELS = ("very_dark", "dark", "normal", "bright", "overexposed")
COLOR_MOODS = ("very_cool", "cool", "neutral", "warm", "very_warm")
EFFECT_TYPES = ("blinking", "search_light", "explosion")
EFFECT_MOTIONS = ("static", "sweeping", "random")
EFFECT_INTENSITIES = ("high", "medium", "low")

# accepted spellings that normalize onto a vocabulary token
_ALIASES = {"away_from_static": "static"}

_HEX_RE = re.compile(r"^#[0-9A-Fa-f]{6}$")


@dataclass(frozen=True)
class TimeSegment:
    start: float
    end: float

    def __post_init__(self):
        if self.start < 0 or not self.end > self.start:
            raise IntervalError(f"invalid interval [{self.start}, {self.end})")

    @property
    def duration(self) -> float:
        return self.end - self.start

    def contains(self, t: float) -> bool:
        return self.start <= t < self.end


@dataclass(frozen=True)
class ParticleDescriptor:
    type: str | None
    density: str | None = None


@dataclass(frozen=True)
class ObjectDescriptor:
    description: str | None
    position: str | None = None
    quantity: str | None = None
    size: float | None = None
    motion_pattern: str | None = None


@dataclass(frozen=True)
class ContextDescriptor:
    overall_scene_context: str | None = None
    outside_view_context: str | None = None
    floor_texture_keywords: tuple[str, ...] = ()
    wall_texture_keywords: tuple[str, ...] = ()
    ceiling_texture_keywords: tuple[str, ...] = ()

    def keywords_for(self, surface: str) -> tuple[str, ...]:
        return getattr(self, f"{surface}_texture_keywords")


@dataclass(frozen=True)
class CharacterDescriptor:
    description: str | None
    motion: str | None = None
    quantity: str | None = None
    size: float | None = None


@dataclass(frozen=True)
class BodyDescriptor:
    user_character: str | None


@dataclass(frozen=True)
class LightingDescriptor:
    brightness_level: str | None
    color_mood: str | None = None
    dominant_color_hex: str | None = None


@dataclass(frozen=True)
class EffectiveLightDescriptor:
    type: str | None
    color_hex: str | None = None
    motion: str | None = None
    intensity: str | None = None


Descriptor = Union[
    ParticleDescriptor,
    ObjectDescriptor,
    ContextDescriptor,
    CharacterDescriptor,
    BodyDescriptor,
    LightingDescriptor,
    EffectiveLightDescriptor,
]


@dataclass(frozen=True)
class Segment:
    interval: TimeSegment
    payload: Descriptor | None


@dataclass(frozen=True)
class FeatureDocument:
    feature: Feature
    segments: tuple[Segment, ...]
    warnings: tuple[str, ...] = field(default=(), compare=False)


# --------------------------------------------------------------------------
# parsing


class _Reader:
    def __init__(self, feature: Feature, mode: str):
        if mode not in ("strict", "lenient"):
            raise ValueError(f"mode must be 'strict' or 'lenient', not {mode!r}")
        self.feature = feature
        self.strict = mode == "strict"
        self.warnings: list[str] = []
        self.where = ""

    def warn(self, message: str) -> None:
        self.warnings.append(f"{self.where}: {message}")

    def text(self, obj: dict, key: str) -> str | None:
        value = obj.get(key)
        if value is None:
            return None
        if not isinstance(value, str):
            raise SchemaError(f"{self.where}: {key} must be text, got {type(value).__name__}")
        value = value.strip()
        return value or None

    def enum(self, obj: dict | None, key: str, vocab: tuple[str, ...]) -> str | None:
        value = None if obj is None else obj.get(key)
        if value is None:
            return None
        if not isinstance(value, str):
            raise SchemaError(f"{self.where}: {key} must be a token, got {type(value).__name__}")
        token = value.strip().lower().replace(" ", "_").replace("-", "_")
        token = _ALIASES.get(token, token) if vocab is MOTION_PATTERNS else token
        if token in vocab:
            return token
        if self.strict:
            raise EnumError(f"{self.where}: unknown {key} {value!r}; expected one of {vocab}")
        self.warn(f"unknown {key} {value!r} mapped to null")
        return None

    def size(self, obj: dict, key: str) -> float | None:
        value = obj.get(key)
        if value is None:
            return None
        if isinstance(value, bool):
            raise SchemaError(f"{self.where}: {key} must be a number")
        if isinstance(value, str):
            try:
                value = float(value.strip())
            except ValueError:
                raise SchemaError(f"{self.where}: {key} {value!r} is not numeric") from None
        if not isinstance(value, (int, float)):
            raise SchemaError(f"{self.where}: {key} must be a number")
        try:
            value = float(value)
        except OverflowError:
            raise SchemaError(f"{self.where}: {key} out of range") from None
        if not math.isfinite(value):
            raise SchemaError(f"{self.where}: {key} must be a finite number")
        value = canonical.quantize(value)
        if value <= 0:
            if self.strict:
                raise SchemaError(f"{self.where}: {key} must be positive, got {value}")
            self.warn(f"non-positive {key} {value} mapped to null")
            return None
        return value

    def hex_color(self, obj: dict, key: str) -> str | None:
        value = self.text(obj, key)
        if value is None:
            return None
        if _HEX_RE.match(value):
            return value.upper()
        if self.strict:
            raise SchemaError(f"{self.where}: {key} {value!r} is not #RRGGBB")
        self.warn(f"malformed {key} {value!r} mapped to null")
        return None

    def keywords(self, obj: dict, key: str) -> tuple[str, ...]:
        value = obj.get(key)
        if value is None:
            if self.strict:
                raise SchemaError(f"{self.where}: {key} must be a list (use [] when empty)")
            self.warn(f"missing {key} treated as []")
            return ()
        if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
            raise SchemaError(f"{self.where}: {key} must be a list of text")
        return tuple(v.strip() for v in value if v.strip())

    def mapping(self, seg: dict, key: str) -> dict | None:
        if key not in seg:
            raise SchemaError(f"{self.where}: missing {key!r}")
        value = seg[key]
        if value is None:
            return None
        if not isinstance(value, dict):
            raise SchemaError(f"{self.where}: {key} must be an object")
        return value


def _seconds(value: Any, key: str, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SchemaError(f"{where}: {key} must be a number of seconds")
    try:
        value = float(value)
    except OverflowError:
        raise SchemaError(f"{where}: {key} out of range") from None
    if not math.isfinite(value):
        raise SchemaError(f"{where}: {key} must be finite")
    return canonical.quantize(value)


def _payload(r: _Reader, seg: dict) -> Descriptor | None:
    feature = r.feature
    key = PAYLOAD_KEY[feature]
    if feature is Feature.BODY:
        if key not in seg:
            raise SchemaError(f"{r.where}: missing {key!r}")
        value = r.text(seg, key)
        return None if value is None else BodyDescriptor(value)

    obj = r.mapping(seg, key)
    if obj is None:
        return None
    if feature is Feature.PARTICLES:
        kind = r.enum(obj, "type", PARTICLE_TYPES)
        if kind is None:
            return None
        return ParticleDescriptor(kind, r.enum(obj, "density", PARTICLE_DENSITIES))
    if feature is Feature.OBJECTS:
        description = r.text(obj, "description")
        if description is None:
            return None
        motion = obj.get("motion_details")
        if motion is not None and not isinstance(motion, dict):
            raise SchemaError(f"{r.where}: motion_details must be an object")
        return ObjectDescriptor(
            description,
            r.enum(obj, "position", OBJECT_POSITIONS),
            r.enum(obj, "quantity", QUANTITIES),
            r.size(obj, "size"),
            r.enum(motion, "pattern", MOTION_PATTERNS),
        )
    if feature in (Feature.TEXTURES, Feature.WINDOW):
        return ContextDescriptor(
            r.text(obj, "overall_scene_context"),
            r.text(obj, "outside_view_context"),
            r.keywords(obj, "floor_texture_keywords"),
            r.keywords(obj, "wall_texture_keywords"),
            r.keywords(obj, "ceiling_texture_keywords"),
        )
    if feature is Feature.CHARACTERS:
        description = r.text(obj, "description")
        if description is None:
            return None
        return CharacterDescriptor(
            description,
            r.enum(obj, "motion", CHARACTER_MOTIONS),
            r.enum(obj, "quantity", QUANTITIES),
            r.size(obj, "size"),
        )
    if feature is Feature.LIGHTING:
        return LightingDescriptor(
            r.enum(obj, "brightness_level", BRIGHTNESS_LEVELS),
            r.enum(obj, "color_mood", COLOR_MOODS),
            r.hex_color(obj, "dominant_color_hex"),
        )
    # effective light
    kind = r.enum(obj, "type", EFFECT_TYPES)
    if kind is None:
        return None
    return EffectiveLightDescriptor(
        kind,
        r.hex_color(obj, "color_hex"),
        r.enum(obj, "motion", EFFECT_MOTIONS),
        r.enum(obj, "intensity", EFFECT_INTENSITIES),
    )


def parse_feature_document(raw: bytes | str, feature: Feature | str, mode: str = "strict") -> FeatureDocument:
    """Parse one analyzer output document.

    ``mode="lenient"`` maps unknown enum tokens (and other recoverable field
    problems) to null and records a warning instead of raising.
    """
    feature = Feature(feature)
    if isinstance(raw, (bytes, bytearray)):
        try:
            raw = bytes(raw).decode("utf-8")
        except UnicodeDecodeError as exc:
            raise DescriptorSyntaxError(f"not UTF-8: {exc}") from None
    if not raw.strip():
        raise SchemaError("empty document")
    try:
        data = json.loads(raw)
    except (ValueError, RecursionError) as exc:
        raise DescriptorSyntaxError(f"malformed JSON: {exc}") from None
    if not isinstance(data, list):
        raise SchemaError("document must be an array of segments")

    r = _Reader(feature, mode)
    segments = []
    for i, seg in enumerate(data):
        r.where = f"{feature.value}[{i}]"
        if not isinstance(seg, dict):
            raise SchemaError(f"{r.where}: segment must be an object")
        for key in ("timestamp_start", "timestamp_end"):
            if key not in seg:
                raise SchemaError(f"{r.where}: missing {key!r}")
        start = _seconds(seg["timestamp_start"], "timestamp_start", r.where)
        end = _seconds(seg["timestamp_end"], "timestamp_end", r.where)
        try:
            interval = TimeSegment(start, end)
        except IntervalError as exc:
            raise IntervalError(f"{r.where}: {exc}") from None
        segments.append(Segment(interval, _payload(r, seg)))
    return FeatureDocument(feature, tuple(segments), tuple(r.warnings))


# --------------------------------------------------------------------------
# serialization


def _payload_json(feature: Feature, payload: Descriptor | None) -> Any:
    if feature is Feature.BODY:
        return None if payload is None else payload.user_character
    if payload is None:
        if feature is Feature.PARTICLES:
            return {"type": None, "density": None}
        if feature in (Feature.OBJECTS, Feature.CHARACTERS):
            return {"description": None}
        return None
    if isinstance(payload, ObjectDescriptor):
        return {
            "description": payload.description,
            "position": payload.position,
            "quantity": payload.quantity,
            "size": payload.size,
            "motion_details": {"pattern": payload.motion_pattern},
        }
    if isinstance(payload, ContextDescriptor):
        return {
            "overall_scene_context": payload.overall_scene_context,
            "outside_view_context": payload.outside_view_context,
            "floor_texture_keywords": list(payload.floor_texture_keywords),
            "wall_texture_keywords": list(payload.wall_texture_keywords),
            "ceiling_texture_keywords": list(payload.ceiling_texture_keywords),
        }
    return dict(payload.__dict__)


def document_to_json(doc: FeatureDocument) -> list[dict]:
    key = PAYLOAD_KEY[doc.feature]
    return [
        {
            "timestamp_start": seg.interval.start,
            "timestamp_end": seg.interval.end,
            key: _payload_json(doc.feature, seg.payload),
        }
        for seg in doc.segments
    ]


def serialize_document(doc: FeatureDocument) -> bytes:
    return canonical.dumps(document_to_json(doc)).encode("utf-8")


# --------------------------------------------------------------------------
# validation


def is_complete(payload: Descriptor | None) -> bool:
    """Completeness: a present descriptor has every field the prompt asks for."""
    if payload is None:
        return True
    if isinstance(payload, ObjectDescriptor):
        fields = (payload.position, payload.quantity, payload.size, payload.motion_pattern)
    elif isinstance(payload, CharacterDescriptor):
        fields = (payload.motion, payload.quantity, payload.size)
    elif isinstance(payload, ParticleDescriptor):
        fields = (payload.density,)
    elif isinstance(payload, LightingDescriptor):
        fields = (payload.brightness_level, payload.color_mood, payload.dominant_color_hex)
    elif isinstance(payload, EffectiveLightDescriptor):
        fields = (payload.color_hex, payload.motion, payload.intensity)
    else:
        return True
    return all(f is not None for f in fields)


def is_plannable(feature: Feature, payload: Descriptor | None) -> bool:
    """Whether a segment carries enough data to produce an augmentation."""
    if payload is None:
        return False
    if feature in (Feature.OBJECTS, Feature.CHARACTERS, Feature.PARTICLES):
        return is_complete(payload)
    if feature is Feature.TEXTURES:
        return bool(
            payload.floor_texture_keywords
            or payload.wall_texture_keywords
            or payload.ceiling_texture_keywords
            or payload.overall_scene_context
        )
    if feature is Feature.WINDOW:
        return payload.outside_view_context is not None
    if feature is Feature.LIGHTING:
        return payload.brightness_level is not None
    return True


@dataclass(frozen=True)
class Violation:
    rule: str  # overlap | out_of_range | completeness
    segment_index: int
    message: str


@dataclass(frozen=True)
class ValidationReport:
    feature: Feature
    violations: tuple[Violation, ...] = ()
    warnings: tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations


_PLURAL_EXEMPT = ("ss", "us", "is", "os", "ous", "ics")


def _looks_plural(text: str) -> bool:
    last = re.sub(r"[^a-z]", "", text.strip().split()[-1].lower()) if text.strip() else ""
    return len(last) > 3 and last.endswith("s") and not last.endswith(_PLURAL_EXEMPT)


def _descriptive_strings(payload: Descriptor | None) -> list[str]:
    if isinstance(payload, (ObjectDescriptor, CharacterDescriptor)):
        return [payload.description] if payload.description else []
    if isinstance(payload, ContextDescriptor):
        return [
            *payload.floor_texture_keywords,
            *payload.wall_texture_keywords,
            *payload.ceiling_texture_keywords,
        ]
    return []


def validate_document(doc: FeatureDocument, clip_duration: float, mode: str = "lenient") -> ValidationReport:
    """Check the segmentation rules the analyzer is asked to follow.

    Lenient mode returns the report for the timeline compiler to repair;
    strict mode raises :class:`ValidationFailure` when anything is violated.
    """
    violations: list[Violation] = []
    warnings = list(doc.warnings)
    tol = 1e-9

    order = sorted(range(len(doc.segments)), key=lambda i: (doc.segments[i].interval.start, i))
    reach, reach_index = -math.inf, -1
    for i in order:
        seg = doc.segments[i].interval
        if seg.start < reach - tol:
            violations.append(
                Violation("overlap", i, f"segment {i} [{seg.start}, {seg.end}) overlaps segment {reach_index}")
            )
        if seg.end > reach:
            reach, reach_index = seg.end, i

    for i, seg in enumerate(doc.segments):
        iv = seg.interval
        if iv.start >= clip_duration - tol or iv.end > clip_duration + tol:
            violations.append(
                Violation("out_of_range", i, f"segment {i} [{iv.start}, {iv.end}) exceeds clip duration {clip_duration}")
            )
        if not is_complete(seg.payload):
            violations.append(Violation("completeness", i, f"segment {i} has a description but missing fields"))
        for text in _descriptive_strings(seg.payload):
            if _looks_plural(text):
                warnings.append(f"{doc.feature.value}[{i}]: {text!r} may not be singular")

    violations.sort(key=lambda v: (v.segment_index, v.rule))
    report = ValidationReport(doc.feature, tuple(violations), tuple(warnings))
    if mode == "strict" and violations:
        raise ValidationFailure(report)
    return report
