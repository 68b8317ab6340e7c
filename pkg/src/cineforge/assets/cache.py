"""Content-addressed artifact cache: ``<root>/<job_id>/artifact.<ext>`` + ``record.json``."""

from __future__ import annotations

import json
import os
import shutil
import tempfile
from pathlib import Path

from .. import canonical


class AssetCache:
    def __init__(self, root: str | os.PathLike):
        self.root = Path(root)

    def entry_dir(self, job_id: str) -> Path:
        return self.root / job_id

    def lookup(self, job_id: str) -> dict | None:
        """The stored record for ``job_id`` if a complete entry exists."""
        entry = self.entry_dir(job_id)
        try:
            record = json.loads((entry / "record.json").read_text(encoding="utf-8"))
        except (OSError, ValueError):
            return None
        if not (entry / record.get("artifact_name", "")).is_file():
            return None
        return record

    def store(self, job_id: str, ext: str, artifact: bytes, record: dict) -> dict:
        """Publish an entry atomically; a concurrent writer's entry wins if it got there first."""
        self.root.mkdir(parents=True, exist_ok=True)
        record = {**record, "artifact_name": f"artifact.{ext}"}
        tmp = Path(tempfile.mkdtemp(dir=self.root, prefix=f".{job_id[:12]}."))
        try:
            (tmp / f"artifact.{ext}").write_bytes(artifact)
            (tmp / "record.json").write_text(canonical.dumps(record), encoding="utf-8")
            try:
                os.rename(tmp, self.entry_dir(job_id))
            except OSError:
                existing = self.lookup(job_id)
                if existing is None:
                    shutil.rmtree(self.entry_dir(job_id), ignore_errors=True)
                    os.rename(tmp, self.entry_dir(job_id))
                else:
                    return existing
        finally:
            if tmp.exists():
                shutil.rmtree(tmp, ignore_errors=True)
        return record

    def artifact_path(self, job_id: str, record: dict) -> Path:
        return self.entry_dir(job_id) / record["artifact_name"]
