"""Lower normalized timelines plus a room into typed, timed render directives.

All randomness comes from per-directive streams keyed by
``(seed, feature, segment_index, directive_index)``, so a plan is a pure
function of its inputs and the seed.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping

from . import canonical, rng
from .assets.jobs import entity_jobs, hand_job, retexture_job, texture_job, window_job
from .descriptors import Feature, FeatureDocument, ObjectDescriptor
from .errors import MissingAnchor, NonPositiveSize
from .room import PlacementZones, RoomModel, SurfaceTiling, placement_zones, tile_surface
from .timeline import FeatureTimeline, MasterSchedule, TimeSegment, merge, normalize

log = logging.getLogger(__name__)

Vec3 = tuple[float, float, float]

PARTICLE_RATES = {
    "rain": (50, 100, 150, 250),
    "snow": (100, 200, 300, 600),
    "dust": (4, 7, 10, 15),
    "smoke": (4, 7, 10, 15),
    "fog": (4, 7, 10, 15),
}
DENSITIES = ("sparse", "moderate", "dense", "torrential")

MAX_SIZE_RATIO = 1.3
MAX_COUNT = 20
QUANTITY_BASE = {"a_few": 2, "several": 4, "many": 10, "countless": 20}
LARGE_SIZE_RATIO = 0.5
AIR_HEIGHT = 0.5
HUMAN_HEIGHT = 1.7  # metres for size_ratio 1.0

APPROACH_SPEED = 0.5
FALL_SPEED = 1.0
RANDOM_SPEED = (-0.5, 0.5)
RESAMPLE_PERIOD = 1.0

BRIGHTNESS = {"very_dark": 0.25, "dark": 0.5, "normal": 1.0, "bright": 2.0, "overexposed": 4.0}
EFFECTS = {"blinking": "flicker", "search_light": "spotlight", "explosion": "whiteout"}
FLICKER_RANGE = (0.4, 2.0)
FLICKER_PERIOD = 0.1
WHITEOUT_MULTIPLIER = 2.0
SPOT_HEIGHT = 2.5
SPOT_HALF_ANGLE = 25.0

FRAME_OFFSET = 0.01
WINDOW_FRAME_ASSET = "builtin/window_frame.png"


# --------------------------------------------------------------------------
# directive types


@dataclass(frozen=True)
class ClipInfo:
    clip_id: str
    duration: float
    movie_name: str = ""


@dataclass(frozen=True)
class MotionSpec:
    pattern: str
    velocity: Vec3 = (0.0, 0.0, 0.0)
    speed_range: tuple[float, float] | None = None
    axes: tuple[str, ...] = ()
    resample_period: float | None = None
    seed: int | None = None

    def velocity_at(self, t: float, instance: int = 0) -> Vec3:
        """Velocity of one spawned instance ``t`` seconds into its segment."""
        if self.speed_range is None:
            return self.velocity
        k = math.floor(t / self.resample_period)
        lo, hi = self.speed_range
        v = [0.0, 0.0, 0.0]
        for axis in self.axes:
            i = "xyz".index(axis)
            v[i] = rng.uniform(lo, hi, self.seed, instance, k, axis)
        return tuple(v)

    def position_at(self, start: Vec3, t: float, instance: int = 0) -> Vec3:
        if self.speed_range is None:
            return tuple(p + v * t for p, v in zip(start, self.velocity))
        pos = list(start)
        period = self.resample_period
        k, elapsed = 0, 0.0
        while elapsed < t:
            step = min(period, t - elapsed)
            v = self.velocity_at(k * period, instance)
            pos = [p + vi * step for p, vi in zip(pos, v)]
            elapsed += step
            k += 1
        return tuple(pos)


@dataclass(frozen=True)
class ParticleDirective:
    segment_index: int
    interval: TimeSegment
    particle_type: str
    density: str
    emission_rate: int
    region: str = "room"


@dataclass(frozen=True)
class SpawnPlan:
    """Objects or characters spawned for one segment."""

    segment_index: int
    interval: TimeSegment
    entity_kind: str  # object | character
    description: str
    image_asset: str
    asset: str
    count: int
    size_ratio: float
    world_height: float
    position: str  # on_the_floor | in_the_air
    placements: tuple[Vec3, ...]
    motion: MotionSpec

    @property
    def assets(self) -> tuple[str, ...]:
        return (self.image_asset, self.asset)


@dataclass(frozen=True)
class TextureApplyPlan:
    segment_index: int
    interval: TimeSegment
    surface: str
    surface_kind: str
    keywords: tuple[str, ...]
    tiling: SurfaceTiling
    asset: str
    lighting_responsive: bool = True
    occlude_original: bool = True

    @property
    def assets(self) -> tuple[str, ...]:
        return (self.asset,)


@dataclass(frozen=True)
class MeshRetexturePlan:
    segment_index: int
    interval: TimeSegment
    prompt: str
    asset: str

    @property
    def assets(self) -> tuple[str, ...]:
        return (self.asset,)


@dataclass(frozen=True)
class BodyOverlayPlan:
    segment_index: int
    interval: TimeSegment
    user_character: str
    asset: str
    target: str = "both_hands"

    @property
    def assets(self) -> tuple[str, ...]:
        return (self.asset,)


@dataclass(frozen=True)
class WindowPlan:
    segment_index: int
    interval: TimeSegment
    window: str
    outside_view_context: str
    asset: str
    frame_position: Vec3
    forward: Vec3
    frame_asset: str = WINDOW_FRAME_ASSET
    frame_offset: float = FRAME_OFFSET
    lighting_responsive: bool = False

    @property
    def assets(self) -> tuple[str, ...]:
        return (self.asset,)


@dataclass(frozen=True)
class LightingPlan:
    segment_index: int
    interval: TimeSegment
    brightness_level: str
    base_brightness: float
    color_mood: str | None = None
    dominant_color_hex: str | None = None


@dataclass(frozen=True)
class Spotlight:
    target: Vec3
    apex: Vec3
    half_angle_deg: float = SPOT_HALF_ANGLE


@dataclass(frozen=True)
class LightEffectPlan:
    """A special lighting effect layered on the base brightness."""

    segment_index: int
    interval: TimeSegment
    source_type: str  # blinking | search_light | explosion
    effect: str  # flicker | spotlight | whiteout
    factor_range: tuple[float, float] | None = None
    update_period: float | None = None
    seed: int | None = None
    multiplier: float | None = None
    spotlight: Spotlight | None = None
    color_hex: str | None = None
    motion: str | None = None
    intensity: str | None = None

    def factor_at(self, t: float) -> float:
        """Brightness multiplier at absolute clip time ``t``."""
        if self.effect == "flicker":
            k = math.floor((t - self.interval.start) / self.update_period + 1e-9)
            return flicker_factor(self.seed, k)
        if self.effect == "whiteout":
            return self.multiplier
        return 1.0


@dataclass(frozen=True)
class AugmentationPlan:
    clip: ClipInfo
    room: RoomModel
    seed: int
    schedule: MasterSchedule
    particles: tuple[ParticleDirective, ...] = ()
    objects: tuple[SpawnPlan, ...] = ()
    textures: tuple[TextureApplyPlan, ...] = ()
    retextures: tuple[MeshRetexturePlan, ...] = ()
    characters: tuple[SpawnPlan, ...] = ()
    body: tuple[BodyOverlayPlan, ...] = ()
    window: tuple[WindowPlan, ...] = ()
    lighting: tuple[LightingPlan, ...] = ()
    effects: tuple[LightEffectPlan, ...] = ()
    warnings: tuple[str, ...] = field(default=(), compare=False)

    def directives(self, feature: Feature) -> tuple:
        return {
            Feature.PARTICLES: self.particles,
            Feature.OBJECTS: self.objects,
            Feature.TEXTURES: self.textures + self.retextures,
            Feature.CHARACTERS: self.characters,
            Feature.BODY: self.body,
            Feature.WINDOW: self.window,
            Feature.LIGHTING: self.lighting,
            Feature.EFFECTIVE_LIGHT: self.effects,
        }[feature]


# --------------------------------------------------------------------------
# numeric rules


def particle_rate(particle_type: str, density: str) -> int:
    return PARTICLE_RATES[particle_type][DENSITIES.index(density)]


def clamp_size(size_ratio: float) -> float:
    if not size_ratio > 0:
        raise NonPositiveSize(f"size ratio must be positive, got {size_ratio}")
    return min(size_ratio, MAX_SIZE_RATIO)


def resolve_quantity(label: str, size_ratio: float) -> int:
    """Entity count: base/size_ratio, rounded half away from zero, in [1, 20]."""
    exact = Fraction(QUANTITY_BASE[label]) / Fraction(repr(float(size_ratio)))
    rounded = math.floor(exact + Fraction(1, 2))
    return max(1, min(MAX_COUNT, rounded))


def sample_positions(count: int, size_ratio: float, air: bool, zones: PlacementZones, stream) -> list[Vec3]:
    """Large entities go beside/behind the viewer, small ones near the screen."""
    height = AIR_HEIGHT if air else 0.0
    if size_ratio > LARGE_SIZE_RATIO:
        return zones.sample_large(stream, count, height)
    return zones.sample_small(stream, count, height)


def motion_for(pattern: str, seed: int) -> MotionSpec:
    if pattern == "static":
        return MotionSpec("static")
    if pattern == "to_user":
        return MotionSpec("to_user", (0.0, 0.0, -APPROACH_SPEED))
    if pattern == "away_from_user":
        return MotionSpec("away_from_user", (0.0, 0.0, APPROACH_SPEED))
    if pattern == "falling":
        return MotionSpec("falling", (0.0, -FALL_SPEED, 0.0))
    if pattern == "chaotic":
        return MotionSpec("chaotic", speed_range=RANDOM_SPEED, axes=("x", "y", "z"), resample_period=RESAMPLE_PERIOD, seed=seed)
    if pattern == "wander":
        return MotionSpec("wander", speed_range=RANDOM_SPEED, axes=("x", "z"), resample_period=RESAMPLE_PERIOD, seed=seed)
    raise ValueError(f"unknown motion pattern {pattern!r}")


def flicker_factor(seed: int, k: int) -> float:
    """Flicker multiplier for update period ``k`` (counter-based, stateless)."""
    return rng.uniform(FLICKER_RANGE[0], FLICKER_RANGE[1], seed, "flicker", k)


def brightness_multiplier(level: str) -> float:
    return BRIGHTNESS[level]


# --------------------------------------------------------------------------
# lowering


@dataclass
class _Context:
    room: RoomModel
    clip: ClipInfo
    seed: int
    zones: PlacementZones | None = None
    warnings: list[str] = field(default_factory=list)

    def stream_seed(self, feature: Feature, segment: int, directive: int = 0) -> int:
        return rng.stream_seed(self.seed, feature.value, segment, directive)

    def warn(self, message: str) -> None:
        log.warning(message)
        self.warnings.append(message)


def _spawn(ctx: _Context, feature: Feature, i: int, interval, desc) -> SpawnPlan:
    kind = "object" if isinstance(desc, ObjectDescriptor) else "character"
    size = canonical.quantize(clamp_size(desc.size))
    count = resolve_quantity(desc.quantity, size)
    seed = ctx.stream_seed(feature, i)
    if ctx.zones is None:
        ctx.zones = placement_zones(ctx.room)
    if kind == "object":
        air = desc.position == "in_the_air"
        position, motion = desc.position, motion_for(desc.motion_pattern, seed)
    else:
        air = False
        position = "on_the_floor"
        motion = motion_for("wander" if desc.motion == "moving" else "static", seed)
    placements = sample_positions(count, size, air, ctx.zones, rng.generator(seed))
    image, mesh = entity_jobs(kind, desc.description, ctx.clip.movie_name)
    return SpawnPlan(
        segment_index=i,
        interval=interval,
        entity_kind=kind,
        description=desc.description,
        image_asset=image.job_id,
        asset=mesh.job_id,
        count=count,
        size_ratio=size,
        world_height=canonical.quantize(size * HUMAN_HEIGHT),
        position=position,
        placements=tuple(placements),
        motion=motion,
    )


def _textures(ctx: _Context, i: int, interval, desc) -> list:
    out: list = []
    room = ctx.room
    surfaces = [*room.by_label("floor"), *room.by_label("wall"), *room.by_label("ceiling")]
    for anchor in surfaces:
        keywords = desc.keywords_for(anchor.label)
        if not keywords:
            continue
        job = texture_job(anchor.label, keywords)
        out.append(TextureApplyPlan(i, interval, anchor.name, anchor.label, keywords, tile_surface(anchor).quantized(), job.job_id))
    if room.mesh_sha256 and desc.overall_scene_context:
        job = retexture_job(desc.overall_scene_context, room.mesh_sha256, room.mesh_path)
        out.append(MeshRetexturePlan(i, interval, desc.overall_scene_context, job.job_id))
    return out


def _windows(ctx: _Context, i: int, interval, desc) -> list[WindowPlan]:
    windows = ctx.room.by_label("window")
    if not windows:
        ctx.warn(f"window segment {i} dropped: {MissingAnchor.__name__} (room has no window)")
        return []
    job = window_job(desc.outside_view_context)
    out = []
    for w in windows:
        fwd = w.forward()
        frame = tuple(canonical.quantize(p + FRAME_OFFSET * f) for p, f in zip(w.position, fwd))
        out.append(
            WindowPlan(i, interval, w.name, desc.outside_view_context, job.job_id, frame, tuple(canonical.quantize(f) for f in fwd))
        )
    return out


def _effect(ctx: _Context, i: int, interval, desc) -> LightEffectPlan:
    effect = EFFECTS[desc.type]
    common = dict(color_hex=desc.color_hex, motion=desc.motion, intensity=desc.intensity)
    if effect == "flicker":
        return LightEffectPlan(
            i, interval, desc.type, effect,
            factor_range=FLICKER_RANGE, update_period=FLICKER_PERIOD,
            seed=ctx.stream_seed(Feature.EFFECTIVE_LIGHT, i), **common,
        )
    if effect == "whiteout":
        return LightEffectPlan(i, interval, desc.type, effect, multiplier=WHITEOUT_MULTIPLIER, **common)
    sc = ctx.room.screen
    floor_y = ctx.room.floor.position[1]
    target = (sc.center[0], floor_y, sc.center[2])
    apex = (sc.center[0], canonical.quantize(floor_y + SPOT_HEIGHT), sc.center[2])
    return LightEffectPlan(i, interval, desc.type, effect, spotlight=Spotlight(target, apex), **common)


def plan_feature(timeline: FeatureTimeline, room: RoomModel, clip: ClipInfo, seed: int, _ctx: _Context | None = None) -> list:
    """Directives for one feature timeline, in segment order."""
    ctx = _ctx or _Context(room, clip, seed)
    f = timeline.feature
    out: list = []
    for i, entry in enumerate(timeline.entries):
        iv, desc = entry.interval, entry.payload
        if f is Feature.PARTICLES:
            out.append(ParticleDirective(i, iv, desc.type, desc.density, particle_rate(desc.type, desc.density)))
        elif f in (Feature.OBJECTS, Feature.CHARACTERS):
            out.append(_spawn(ctx, f, i, iv, desc))
        elif f is Feature.TEXTURES:
            out.extend(_textures(ctx, i, iv, desc))
        elif f is Feature.BODY:
            out.append(BodyOverlayPlan(i, iv, desc.user_character, hand_job(desc.user_character).job_id))
        elif f is Feature.WINDOW:
            out.extend(_windows(ctx, i, iv, desc))
        elif f is Feature.LIGHTING:
            out.append(
                LightingPlan(i, iv, desc.brightness_level, brightness_multiplier(desc.brightness_level), desc.color_mood, desc.dominant_color_hex)
            )
        else:
            out.append(_effect(ctx, i, iv, desc))
    return out


def build_plan(
    documents: Mapping[Feature, FeatureDocument] | list[FeatureDocument],
    room: RoomModel,
    clip: ClipInfo,
    seed: int = 0,
) -> AugmentationPlan:
    """Normalize every document, merge the schedule and lower each feature."""
    if not isinstance(documents, Mapping):
        documents = {d.feature: d for d in documents}
    timelines = [normalize(documents[f], clip.duration) for f in Feature if f in documents]
    schedule = merge(timelines, clip.duration)
    ctx = _Context(room, clip, seed)
    lowered = {tl.feature: plan_feature(tl, room, clip, seed, ctx) for tl in timelines}

    def take(feature, cls=None):
        items = lowered.get(feature, [])
        return tuple(d for d in items if cls is None or isinstance(d, cls))

    return AugmentationPlan(
        clip=clip,
        room=room,
        seed=seed,
        schedule=schedule,
        particles=take(Feature.PARTICLES),
        objects=take(Feature.OBJECTS),
        textures=take(Feature.TEXTURES, TextureApplyPlan),
        retextures=take(Feature.TEXTURES, MeshRetexturePlan),
        characters=take(Feature.CHARACTERS),
        body=take(Feature.BODY),
        window=take(Feature.WINDOW),
        lighting=take(Feature.LIGHTING),
        effects=take(Feature.EFFECTIVE_LIGHT),
        warnings=tuple(ctx.warnings),
    )
