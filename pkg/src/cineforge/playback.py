"""Renderer-facing manifest export and a deterministic playback simulator."""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Iterable, Iterator

from pydantic import TypeAdapter

from . import canonical
from .assets.execute import AssetRecord
from .assets.jobs import ARTIFACT_EXT, plan_jobs
from .assets.placeholders import window_frame_png
from .descriptors import Feature
from .errors import CineforgeError, OutOfRange
from .planner import WINDOW_FRAME_ASSET, AugmentationPlan, LightEffectPlan, LightingPlan, SpawnPlan
from .timeline import ScheduleEvent, active_at

FORMAT_VERSION = "1.0"
ASSET_DIR = "assets"

DIRECTIVE_FIELDS = (
    "particles",
    "objects",
    "textures",
    "retextures",
    "characters",
    "body",
    "window",
    "lighting",
    "effects",
)
FIELD_FEATURE = {
    "particles": Feature.PARTICLES,
    "objects": Feature.OBJECTS,
    "textures": Feature.TEXTURES,
    "retextures": Feature.TEXTURES,
    "characters": Feature.CHARACTERS,
    "body": Feature.BODY,
    "window": Feature.WINDOW,
    "lighting": Feature.LIGHTING,
    "effects": Feature.EFFECTIVE_LIGHT,
}

_PLAN = TypeAdapter(AugmentationPlan)


class IoError(CineforgeError):
    pass


def plan_to_json(plan: AugmentationPlan) -> dict:
    return dataclasses.asdict(plan)


def plan_from_json(data: dict) -> AugmentationPlan:
    return _PLAN.validate_python(data)


def save_plan(plan: AugmentationPlan, path: str | Path) -> None:
    canonical.atomic_write(path, canonical.dumps(plan_to_json(plan)))


def load_plan(path: str | Path) -> AugmentationPlan:
    return plan_from_json(json.loads(Path(path).read_text(encoding="utf-8")))


@dataclass(frozen=True)
class AssetEntry:
    kind: str
    status: str  # ok | failed | skipped | missing
    path: str | None = None
    sha256: str | None = None
    provider: str | None = None
    description: str | None = None


@dataclass(frozen=True)
class AugmentationManifest:
    plan: AugmentationPlan
    assets: dict[str, AssetEntry]
    format_version: str = FORMAT_VERSION
    base_dir: str | None = field(default=None, compare=False)

    def asset_ok(self, job_id: str) -> bool:
        entry = self.assets.get(job_id)
        return entry is not None and entry.status == "ok"

    def directive_ok(self, directive) -> bool:
        return all(self.asset_ok(j) for j in getattr(directive, "assets", ()))

    def to_json(self) -> dict:
        plan = plan_to_json(self.plan)
        directives = {}
        for name in DIRECTIVE_FIELDS:
            items = []
            for d, raw in zip(getattr(self.plan, name), plan.pop(name)):
                jobs = getattr(d, "assets", ())
                raw["asset_status"] = "ok" if self.directive_ok(d) else "failed"
                if jobs:
                    raw["asset_paths"] = {j: self.assets[j].path for j in jobs if j in self.assets}
                items.append(raw)
            directives[name] = items
        return {
            "format_version": self.format_version,
            "clip": plan["clip"],
            "seed": plan["seed"],
            "room": plan["room"],
            "schedule": plan["schedule"],
            "directives": directives,
            "assets": {k: dict(v.__dict__) for k, v in sorted(self.assets.items())},
            "warnings": plan["warnings"],
        }


def _copy(src: Path, dest: Path) -> None:
    data = src.read_bytes()
    if not dest.exists() or dest.read_bytes() != data:
        canonical.atomic_write(dest, data)


def export_manifest(plan: AugmentationPlan, records: Iterable[AssetRecord], out: str | Path) -> AugmentationManifest:
    """Write ``manifest.json`` and its sibling asset directory.

    Baked artifacts are copied to ``assets/<job_id>.<ext>``; jobs without a
    successful record are listed with their failure status and every
    directive depending on them is flagged ``asset_status: failed``.
    """
    out = Path(out)
    base = out.parent
    by_id = {r.job_id: r for r in records}
    assets: dict[str, AssetEntry] = {}
    try:
        for job in plan_jobs(plan):
            rec = by_id.get(job.job_id)
            if rec is None or not rec.ok or not rec.artifact or not Path(rec.artifact).is_file():
                status = "missing" if rec is None else ("failed" if rec.ok else rec.status)
                assets[job.job_id] = AssetEntry(job.kind, status)
                continue
            rel = f"{ASSET_DIR}/{job.job_id}.{ARTIFACT_EXT[job.kind]}"
            _copy(Path(rec.artifact), base / rel)
            assets[job.job_id] = AssetEntry(job.kind, "ok", rel, rec.sha256, rec.provider, rec.description)

        if plan.window:
            canonical.atomic_write(base / ASSET_DIR / WINDOW_FRAME_ASSET, window_frame_png())

        room = plan.room
        if room.mesh_path:
            mesh = Path(room.mesh_path)
            rel = f"{ASSET_DIR}/room/{room.mesh_sha256}{mesh.suffix.lower()}"
            _copy(mesh, base / rel)
            plan = dataclasses.replace(plan, room=dataclasses.replace(room, mesh_path=rel))

        manifest = AugmentationManifest(plan, assets, base_dir=str(base))
        canonical.atomic_write(out, canonical.dumps(manifest.to_json()))
    except OSError as exc:
        raise IoError(f"cannot export manifest to {out}: {exc}") from exc
    return manifest


def load_manifest(path: str | Path) -> AugmentationManifest:
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        raise IoError(f"cannot read manifest {path}: {exc}") from exc
    plan = {k: data[k] for k in ("clip", "seed", "room", "schedule")}
    plan["warnings"] = data.get("warnings", [])
    for name in DIRECTIVE_FIELDS:
        plan[name] = [
            {k: v for k, v in d.items() if k not in ("asset_status", "asset_paths")}
            for d in data["directives"].get(name, [])
        ]
    assets = {k: AssetEntry(**v) for k, v in data.get("assets", {}).items()}
    return AugmentationManifest(
        plan_from_json(plan), assets, data.get("format_version", FORMAT_VERSION), base_dir=str(path.parent)
    )


def verify_assets(manifest: AugmentationManifest) -> list[str]:
    """Job ids whose ``ok`` artifact is missing or has the wrong hash."""
    bad = []
    for job_id, entry in sorted(manifest.assets.items()):
        if entry.status != "ok":
            continue
        p = Path(manifest.base_dir or ".") / entry.path
        if not p.is_file() or hashlib.sha256(p.read_bytes()).hexdigest() != entry.sha256:
            bad.append(job_id)
    return bad


# --------------------------------------------------------------------------
# simulation


@dataclass(frozen=True)
class ActiveState:
    time: float
    active: tuple[tuple[Feature, int], ...]
    brightness: float


def _index(manifest: AugmentationManifest) -> tuple[dict, dict]:
    """Per (feature, segment): whether any directive is renderable; plus lighting directives."""
    renderable: dict[tuple[Feature, int], bool] = {}
    lights: dict[tuple[Feature, int], object] = {}
    for name in DIRECTIVE_FIELDS:
        feature = FIELD_FEATURE[name]
        for d in getattr(manifest.plan, name):
            key = (feature, d.segment_index)
            renderable[key] = renderable.get(key, False) or manifest.directive_ok(d)
            if isinstance(d, (LightingPlan, LightEffectPlan)):
                lights[key] = d
    return renderable, lights


def state_at(manifest: AugmentationManifest, t: float, _index_cache=None) -> ActiveState:
    renderable, lights = _index_cache or _index(manifest)
    raw = active_at(manifest.plan.schedule, t)
    active = sorted((k for k in raw if renderable.get(k)), key=lambda k: (k[0].order, k[1]))
    brightness = 1.0
    for key in active:
        d = lights.get(key)
        if isinstance(d, LightingPlan):
            brightness *= d.base_brightness
        elif isinstance(d, LightEffectPlan):
            brightness *= d.factor_at(t)
    return ActiveState(canonical.quantize(t), tuple(active), canonical.quantize(brightness))


def simulate(manifest: AugmentationManifest, t_start: float, t_end: float, step: float) -> Iterator[ScheduleEvent | ActiveState]:
    """Replay the schedule: every start/stop event in ``[t_start, t_end]``
    plus an :class:`ActiveState` sample every ``step`` seconds.

    Events at a sample's instant are emitted before the sample.
    """
    duration = manifest.plan.schedule.clip_duration
    if not 0 <= t_start <= t_end <= duration + 1e-9:
        raise OutOfRange(f"[{t_start}, {t_end}] is not within [0, {duration}]")
    if not step > 0:
        raise OutOfRange(f"step must be positive, got {step}")
    cache = _index(manifest)
    events = [e for e in manifest.plan.schedule.events if t_start <= e.time <= t_end]
    n = math.floor((t_end - t_start) / step + 1e-9)
    samples = (canonical.quantize(t_start + k * step) for k in range(n + 1))
    i = 0
    for t in samples:
        while i < len(events) and events[i].time <= t:
            yield events[i]
            i += 1
        yield state_at(manifest, min(t, duration), cache)
    yield from events[i:]


def stream_record(item: ScheduleEvent | ActiveState) -> dict:
    if isinstance(item, ScheduleEvent):
        return {
            "type": "event",
            "time": item.time,
            "kind": item.kind,
            "feature": item.feature.value,
            "segment_index": item.segment_index,
        }
    return {
        "type": "sample",
        "time": item.time,
        "active": [[f.value, i] for f, i in item.active],
        "brightness": item.brightness,
    }


def write_ndjson(items: Iterable[ScheduleEvent | ActiveState], fh: IO[str]) -> int:
    n = 0
    for item in items:
        fh.write(canonical.dumps_line(stream_record(item)) + "\n")
        n += 1
    return n


def entity_position(spawn: SpawnPlan, instance: int, t: float):
    """World position of one spawned instance at clip time ``t`` (None when inactive)."""
    if not spawn.interval.contains(t):
        return None
    return spawn.motion.position_at(spawn.placements[instance], t - spawn.interval.start, instance)
