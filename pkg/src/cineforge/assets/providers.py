"""Generation providers (image, describer, image-to-mesh, mesh retexture).

Every provider has a deterministic offline mock. Remote providers speak a
minimal HTTP protocol and read their API keys from the environment.
"""

from __future__ import annotations

import base64
import hashlib
import json
import re
from dataclasses import dataclass, field
from pathlib import Path

import httpx

from ..errors import ProviderError
from ..transport import api_key, post_with_retry
from .placeholders import placeholder_png, unit_cube_glb

DEFAULT_KEY_ENV = {
    "image": "CINEFORGE_IMAGE_KEY",
    "describer": "CINEFORGE_IMAGE_KEY",
    "mesh": "CINEFORGE_MESH_KEY",
    "retexture": "CINEFORGE_MESH_KEY",
    "analyzer": "CINEFORGE_ANALYZER_KEY",
}


class MockImageProvider:
    name = "mock-image"

    def __init__(self):
        self.calls = 0

    def generate_image(self, prompt: str, params: dict, *, job_id: str) -> bytes:
        self.calls += 1
        return placeholder_png(job_id)


_ENTITY_LINE = re.compile(r"^\s*(object|character) : (.+) in the movie (.*)$", re.M)


class MockDescriber:
    name = "mock-describer"

    def __init__(self):
        self.calls = 0

    def describe(self, prompt: str, params: dict, *, job_id: str) -> str:
        self.calls += 1
        m = _ENTITY_LINE.search(prompt)
        kind, keywords, movie = m.groups() if m else ("object", "item", "")
        text = (
            f"A full-body, photorealistic, highly detailed depiction of a {kind}, "
            f"isolated against a plain white background. It is a {keywords}"
        )
        if movie:
            text += f" as it appears in {movie}"
        return text + ", shown in a neutral standing posture with even studio light."


class MockMeshProvider:
    name = "mock-mesh"

    def __init__(self):
        self.calls = 0

    def image_to_mesh(self, image: bytes, prompt: str, params: dict, *, job_id: str) -> bytes:
        self.calls += 1
        return unit_cube_glb({"job_id": job_id, "source_image_sha256": hashlib.sha256(image).hexdigest()})


class MockRetextureProvider:
    name = "mock-retexture"

    def __init__(self):
        self.calls = 0

    def retexture(self, mesh: bytes, prompt: str, params: dict, *, job_id: str) -> bytes:
        self.calls += 1
        return unit_cube_glb({"job_id": job_id, "mesh_sha256": params.get("mesh_sha256"), "prompt": prompt})


@dataclass
class _Http:
    endpoint: str
    model: str | None = None
    auth_env: str | None = None
    client: httpx.Client = field(default_factory=lambda: httpx.Client(timeout=300))
    sleep: object = None

    @property
    def name(self) -> str:
        return f"http:{self.model or self.endpoint}"

    def _post(self, **kwargs) -> httpx.Response:
        headers = {}
        key = api_key(self.auth_env)
        if key:
            headers["Authorization"] = f"Bearer {key}"
        extra = {"sleep": self.sleep} if self.sleep else {}
        return post_with_retry(self.client, self.endpoint, headers=headers, **extra, **kwargs)


def _image_bytes(resp: httpx.Response) -> bytes:
    if resp.headers.get("content-type", "").startswith("application/json"):
        try:
            return base64.b64decode(resp.json()["data"][0]["b64_json"])
        except (KeyError, IndexError, ValueError) as exc:
            raise ProviderError(f"unexpected image response: {exc}", kind="schema") from None
    return resp.content


class HttpImageProvider(_Http):
    def generate_image(self, prompt, params, *, job_id):
        size = params.get("resolution") or params.get("size")
        return _image_bytes(self._post(json={"model": self.model, "prompt": prompt, "size": size}))


class HttpDescriber(_Http):
    def describe(self, prompt, params, *, job_id):
        resp = self._post(json={"model": self.model, "prompt": prompt})
        if resp.headers.get("content-type", "").startswith("application/json"):
            return str(resp.json().get("text", ""))
        return resp.text


class HttpMeshProvider(_Http):
    def image_to_mesh(self, image, prompt, params, *, job_id):
        data = {"prompt": prompt, "model": self.model or ""}
        return self._post(files={"image": ("image.png", image, "image/png")}, data=data).content


class HttpRetextureProvider(_Http):
    def retexture(self, mesh, prompt, params, *, job_id):
        data = {"prompt": prompt, "model": self.model or ""}
        return self._post(files={"mesh": ("room.glb", mesh, "model/gltf-binary")}, data=data).content


@dataclass
class Providers:
    image: object = field(default_factory=MockImageProvider)
    describer: object = field(default_factory=MockDescriber)
    mesh: object = field(default_factory=MockMeshProvider)
    retexture: object = field(default_factory=MockRetextureProvider)

    @classmethod
    def mock(cls) -> "Providers":
        return cls()

    def total_calls(self) -> int:
        return sum(getattr(p, "calls", 0) for p in (self.image, self.describer, self.mesh, self.retexture))


_HTTP = {
    "image": HttpImageProvider,
    "describer": HttpDescriber,
    "mesh": HttpMeshProvider,
    "retexture": HttpRetextureProvider,
}


def load_provider_config(path: str | Path | None) -> dict:
    """Per-kind provider settings: ``{"image": {"kind": "http", "endpoint": ..., "model": ..., "auth_env": ...}}``."""
    if path is None:
        return {}
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        raise ProviderError(f"cannot read provider config {path}: {exc}", kind="config") from None
    if not isinstance(data, dict):
        raise ProviderError("provider config must be an object keyed by provider kind", kind="config")
    return data


def build_providers(config: dict, client: httpx.Client | None = None) -> Providers:
    providers = Providers.mock()
    for role, cls in _HTTP.items():
        entry = config.get(role) or {}
        if entry.get("kind", "mock") == "mock":
            continue
        if entry["kind"] != "http" or not entry.get("endpoint"):
            raise ProviderError(f"provider {role!r} needs kind 'mock' or 'http' with an endpoint", kind="config")
        kwargs = {"endpoint": entry["endpoint"], "model": entry.get("model"), "auth_env": entry.get("auth_env", DEFAULT_KEY_ENV[role])}
        if client is not None:
            kwargs["client"] = client
        setattr(providers, role, cls(**kwargs))
    return providers
