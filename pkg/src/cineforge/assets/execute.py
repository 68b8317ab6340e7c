"""Run a job graph through the providers with caching and bounded parallelism."""

from __future__ import annotations

import hashlib
import logging
from concurrent.futures import FIRST_COMPLETED, ThreadPoolExecutor, wait
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable

from ..prompts import limit_description
from .cache import AssetCache
from .jobs import ARTIFACT_EXT, AssetJob, JobGraph
from .providers import Providers

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class AssetRecord:
    job_id: str
    kind: str
    status: str  # ok | failed | skipped
    artifact: str | None = None
    sha256: str | None = None
    provider: str | None = None
    description: str | None = None
    error: str | None = None
    timestamp: str | None = field(default=None, compare=False)

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    def to_json(self) -> dict:
        return dict(self.__dict__)


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _run_job(job: AssetJob, providers: Providers, cache: AssetCache, clock) -> dict:
    description = None
    if job.kind == "entity_image":
        description = limit_description(providers.describer.describe(job.prompt, job.params, job_id=job.job_id))
        artifact = providers.image.generate_image(description, job.params, job_id=job.job_id)
        provider = f"{providers.describer.name}+{providers.image.name}"
    elif job.kind in ("surface_texture", "window_exterior", "hand_texture"):
        artifact = providers.image.generate_image(job.prompt, job.params, job_id=job.job_id)
        provider = providers.image.name
    elif job.kind == "entity_mesh":
        dep = cache.lookup(job.depends_on)
        image = cache.artifact_path(job.depends_on, dep).read_bytes()
        artifact = providers.mesh.image_to_mesh(image, job.prompt, job.params, job_id=job.job_id)
        provider = providers.mesh.name
    elif job.kind == "mesh_retexture":
        mesh = Path(job.inputs["mesh_path"]).read_bytes()
        artifact = providers.retexture.retexture(mesh, job.prompt, job.params, job_id=job.job_id)
        provider = providers.retexture.name
    else:
        raise ValueError(f"unknown job kind {job.kind!r}")
    record = {
        "job_id": job.job_id,
        "kind": job.kind,
        "status": "ok",
        "sha256": hashlib.sha256(artifact).hexdigest(),
        "provider": provider,
        "description": description,
        "prompt": job.prompt,
        "params": job.params,
        "timestamp": clock(),
    }
    return cache.store(job.job_id, ARTIFACT_EXT[job.kind], artifact, record)


def _record(job_id: str, stored: dict, cache: AssetCache) -> AssetRecord:
    return AssetRecord(
        job_id=job_id,
        kind=stored["kind"],
        status="ok",
        artifact=str(cache.artifact_path(job_id, stored)),
        sha256=stored["sha256"],
        provider=stored.get("provider"),
        description=stored.get("description"),
        timestamp=stored.get("timestamp"),
    )


def execute_jobs(
    graph: JobGraph,
    providers: Providers,
    cache: AssetCache,
    parallelism: int = 1,
    clock: Callable[[], str] = _now,
) -> list[AssetRecord]:
    """Execute every job, dependencies first.

    Cached jobs are not re-run. A failed job does not stop the batch; jobs
    depending on it are marked ``skipped``. Records come back sorted by
    job id whatever the completion order.
    """
    if parallelism < 1:
        raise ValueError("parallelism must be >= 1")
    ts = graph.sorter()
    ts.prepare()
    records: dict[str, AssetRecord] = {}

    def dispatch(job: AssetJob):
        dep = job.depends_on
        if dep and not records[dep].ok:
            return AssetRecord(job.job_id, job.kind, "skipped", error=f"dependency {dep} {records[dep].status}")
        stored = cache.lookup(job.job_id)
        if stored is None:
            try:
                stored = _run_job(job, providers, cache, clock)
            except Exception as exc:  # one bad job must not sink the batch
                log.warning("job %s (%s) failed: %s", job.job_id[:12], job.kind, exc)
                return AssetRecord(job.job_id, job.kind, "failed", error=f"{type(exc).__name__}: {exc}")
        return _record(job.job_id, stored, cache)

    with ThreadPoolExecutor(max_workers=parallelism) as pool:
        pending = {}
        while ts.is_active():
            for job_id in sorted(ts.get_ready()):
                pending[pool.submit(dispatch, graph.jobs[job_id])] = job_id
            if not pending:
                break
            done, _ = wait(pending, return_when=FIRST_COMPLETED)
            for fut in done:
                job_id = pending.pop(fut)
                records[job_id] = fut.result()
                ts.done(job_id)
    return [records[k] for k in sorted(records)]
