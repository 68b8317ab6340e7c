"""Asset generation: prompts to jobs, jobs to cached artifacts."""

from .cache import AssetCache
from .execute import AssetRecord, execute_jobs
from .jobs import (
    ARTIFACT_EXT,
    JOB_KINDS,
    AssetJob,
    JobGraph,
    entity_jobs,
    hand_job,
    make_job,
    plan_jobs,
    retexture_job,
    texture_job,
    window_job,
)
from .providers import Providers, build_providers, load_provider_config

__all__ = [
    "ARTIFACT_EXT",
    "JOB_KINDS",
    "AssetCache",
    "AssetJob",
    "AssetRecord",
    "JobGraph",
    "Providers",
    "build_providers",
    "entity_jobs",
    "execute_jobs",
    "hand_job",
    "load_provider_config",
    "make_job",
    "plan_jobs",
    "retexture_job",
    "texture_job",
    "window_job",
]
