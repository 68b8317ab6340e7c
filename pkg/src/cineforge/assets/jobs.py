"""Asset jobs: content-addressed generation tasks and the job graph."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from graphlib import TopologicalSorter

from .. import canonical
from ..prompts import build_entity_prompt, build_texture_prompt

JOB_KINDS = (
    "surface_texture",
    "window_exterior",
    "entity_image",
    "entity_mesh",
    "hand_texture",
    "mesh_retexture",
)

ARTIFACT_EXT = {
    "surface_texture": "png",
    "window_exterior": "png",
    "entity_image": "png",
    "entity_mesh": "glb",
    "hand_texture": "png",
    "mesh_retexture": "glb",
}

ENTITY_RESOLUTION = {"object": "1024x1024", "character": "1024x1536"}
IMAGE_SIZE = "1024x1024"
EXTERIOR_SIZE = "1536x1024"


def job_id_for(kind: str, prompt: str, params: dict) -> str:
    payload = canonical.dumps({"kind": kind, "prompt": prompt, "params": params})
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class AssetJob:
    job_id: str
    kind: str
    prompt: str
    params: dict
    depends_on: str | None = None
    # local inputs (file paths) that must not influence the job identity
    inputs: dict = field(default_factory=dict, compare=False)


def make_job(kind: str, prompt: str, params: dict, depends_on: str | None = None, inputs=None) -> AssetJob:
    if kind not in JOB_KINDS:
        raise ValueError(f"unknown job kind {kind!r}")
    return AssetJob(job_id_for(kind, prompt, params), kind, prompt, dict(params), depends_on, dict(inputs or {}))


def texture_job(surface_kind: str, keywords) -> AssetJob:
    return make_job(
        "surface_texture",
        build_texture_prompt(surface_kind, keywords),
        {"size": IMAGE_SIZE, "surface": surface_kind},
    )


def window_job(outside_view_context: str) -> AssetJob:
    return make_job("window_exterior", outside_view_context, {"size": EXTERIOR_SIZE})


def hand_job(user_character: str) -> AssetJob:
    return make_job("hand_texture", build_texture_prompt("hand", [user_character]), {"size": IMAGE_SIZE})


def entity_jobs(entity_kind: str, description: str, movie_name: str) -> tuple[AssetJob, AssetJob]:
    """Image job (describe, then generate) and the dependent image-to-mesh job."""
    image = make_job(
        "entity_image",
        build_entity_prompt(entity_kind, description, movie_name),
        {"resolution": ENTITY_RESOLUTION[entity_kind], "entity_kind": entity_kind},
    )
    mesh = make_job("entity_mesh", description, {"entity_kind": entity_kind}, depends_on=image.job_id)
    return image, mesh


def retexture_job(overall_scene_context: str, mesh_sha256: str, mesh_path: str | None = None) -> AssetJob:
    return make_job(
        "mesh_retexture",
        overall_scene_context,
        {"mesh_sha256": mesh_sha256},
        inputs={"mesh_path": mesh_path} if mesh_path else None,
    )


@dataclass
class JobGraph:
    jobs: dict[str, AssetJob] = field(default_factory=dict)

    def add(self, job: AssetJob) -> str:
        self.jobs.setdefault(job.job_id, job)
        return job.job_id

    def __len__(self) -> int:
        return len(self.jobs)

    def __iter__(self):
        return iter(self.jobs[k] for k in sorted(self.jobs))

    def sorter(self) -> TopologicalSorter:
        ts = TopologicalSorter()
        for job in self.jobs.values():
            deps = [job.depends_on] if job.depends_on else []
            for dep in deps:
                if dep not in self.jobs:
                    raise KeyError(f"{job.job_id} depends on unknown job {dep}")
            ts.add(job.job_id, *deps)
        return ts

    def order(self) -> list[str]:
        """A deterministic topological order (raises on cycles)."""
        ts = self.sorter()
        ts.prepare()
        out = []
        while ts.is_active():
            ready = sorted(ts.get_ready())
            out.extend(ready)
            ts.done(*ready)
        return out


def plan_jobs(plan) -> JobGraph:
    """Derive the deduplicated job graph from a plan's directives."""
    graph = JobGraph()
    movie = plan.clip.movie_name
    for spawn in (*plan.objects, *plan.characters):
        image, mesh = entity_jobs(spawn.entity_kind, spawn.description, movie)
        graph.add(image)
        graph.add(mesh)
    for tex in plan.textures:
        graph.add(texture_job(tex.surface_kind, tex.keywords))
    for win in plan.window:
        graph.add(window_job(win.outside_view_context))
    for body in plan.body:
        graph.add(hand_job(body.user_character))
    room = plan.room
    for rt in plan.retextures:
        graph.add(retexture_job(rt.prompt, room.mesh_sha256, room.mesh_path))
    return graph
