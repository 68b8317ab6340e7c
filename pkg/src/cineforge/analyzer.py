"""Clip analysis front end: prompt bundles in, parsed feature documents out."""

from __future__ import annotations

import hashlib
import re
import struct
from dataclasses import dataclass, field
from pathlib import Path

import httpx

from . import canonical
from .descriptors import Feature, FeatureDocument, parse_feature_document
from .errors import ProviderError
from .prompts import PromptBundle, assemble_prompt
from .transport import api_key, post_with_retry


def clip_hash(data: bytes) -> str:
    """Short content hash identifying a clip (first 16 hex digits of SHA-256)."""
    return hashlib.sha256(data).hexdigest()[:16]


def _boxes(data: bytes, start: int, end: int):
    pos = start
    while pos + 8 <= end:
        size, kind = struct.unpack_from(">I4s", data, pos)
        header = 8
        if size == 1:
            if pos + 16 > end:
                return
            (size,) = struct.unpack_from(">Q", data, pos + 8)
            header = 16
        elif size == 0:
            size = end - pos
        if size < header or pos + size > end:
            return
        yield kind, pos + header, pos + size
        pos += size


def probe_duration(data: bytes) -> float:
    """Clip duration in seconds from the MP4 ``moov/mvhd`` header."""
    for kind, body, end in _boxes(data, 0, len(data)):
        if kind != b"moov":
            continue
        for sub, sbody, _ in _boxes(data, body, end):
            if sub != b"mvhd":
                continue
            version = data[sbody]
            if version == 1:
                timescale, duration = struct.unpack_from(">IQ", data, sbody + 20)
            else:
                timescale, duration = struct.unpack_from(">II", data, sbody + 12)
            if timescale == 0:
                break
            return duration / timescale
    raise ValueError("no moov/mvhd box found; pass the duration explicitly")


class MockAnalysisProvider:
    """Serves canned documents named ``<clip-hash>.<feature>.json`` from a directory."""

    name = "mock"

    def __init__(self, fixtures: str | Path):
        self.fixtures = Path(fixtures)
        self.calls = 0

    def analyze(self, clip: bytes, clip_id: str, bundle: PromptBundle) -> bytes:
        self.calls += 1
        path = self.fixtures / f"{clip_id}.{bundle.feature.value}.json"
        try:
            return path.read_bytes()
        except OSError as exc:
            raise ProviderError(f"no mock response {path.name}: {exc.strerror}", kind="fixture") from None


@dataclass
class HttpAnalysisProvider:
    """Multipart POST of the video bytes and prompt text; the body is the response document."""

    endpoint: str
    model: str | None = None
    auth_env: str = "CINEFORGE_ANALYZER_KEY"
    client: httpx.Client = field(default_factory=lambda: httpx.Client(timeout=600))
    sleep: object = None
    name: str = "http"

    def analyze(self, clip: bytes, clip_id: str, bundle: PromptBundle) -> bytes:
        headers = {}
        key = api_key(self.auth_env)
        if key:
            headers["Authorization"] = f"Bearer {key}"
        extra = {"sleep": self.sleep} if self.sleep else {}
        resp = post_with_retry(
            self.client,
            self.endpoint,
            headers=headers,
            files={"video": (f"{clip_id}.mp4", clip, "video/mp4")},
            data={"prompt": bundle.text(), "feature": bundle.feature.value, "model": self.model or ""},
            **extra,
        )
        return resp.content


_FENCE = re.compile(rb"^\s*```[a-zA-Z]*\s*\n(.*?)\n\s*```\s*$", re.S)


def strip_fences(raw: bytes) -> bytes:
    """Drop a markdown code fence wrapped around a model response."""
    m = _FENCE.match(raw)
    return m.group(1) if m else raw


def analyze_clip(
    clip: str | Path,
    feature: Feature | str,
    provider,
    *,
    cache_dir: str | Path | None = None,
    audit_dir: str | Path | None = None,
    mode: str = "lenient",
) -> FeatureDocument:
    """Ask ``provider`` for one feature document of ``clip`` and parse it.

    Raw responses are cached under ``cache_dir`` keyed by clip hash, feature
    and prompt hash; a copy goes to ``audit_dir`` when given.
    """
    feature = Feature(feature)
    try:
        data = Path(clip).read_bytes()
    except OSError as exc:
        raise ProviderError(f"cannot read clip {clip}: {exc.strerror}", kind="io") from None
    cid = clip_hash(data)
    bundle = assemble_prompt(feature)
    cached = None
    if cache_dir is not None:
        cached = Path(cache_dir) / "analysis" / f"{cid}.{feature.value}.{bundle.sha256[:16]}.json"
    if cached is not None and cached.is_file():
        raw = cached.read_bytes()
    else:
        raw = provider.analyze(data, cid, bundle)
        if cached is not None:
            canonical.atomic_write(cached, raw)
    if audit_dir is not None:
        canonical.atomic_write(Path(audit_dir) / f"{feature.value}.json", raw)
    return parse_feature_document(strip_fences(raw), feature, mode=mode)
