"""Deterministic stand-in artifacts for the mock providers."""

from __future__ import annotations

import hashlib
import io
import json
import struct

import numpy as np
from PIL import Image

_CUBE_VERTS = np.array(
    [[x, y, z] for x in (-0.5, 0.5) for y in (-0.5, 0.5) for z in (-0.5, 0.5)], dtype="<f4"
)
_CUBE_FACES = np.array(
    [
        [0, 1, 3], [0, 3, 2], [4, 6, 7], [4, 7, 5],
        [0, 4, 5], [0, 5, 1], [2, 3, 7], [2, 7, 6],
        [0, 2, 6], [0, 6, 4], [1, 5, 7], [1, 7, 3],
    ],
    dtype="<u2",
)


def placeholder_png(key: str, size: int = 64) -> bytes:
    """8x8 colour grid derived from ``key``, upscaled to ``size`` pixels."""
    digest = hashlib.sha256(key.encode("utf-8")).digest()
    cells = np.frombuffer((digest * 6)[: 8 * 8 * 3], dtype=np.uint8).reshape(8, 8, 3)
    pixels = np.kron(cells, np.ones((size // 8, size // 8, 1), dtype=np.uint8))
    buf = io.BytesIO()
    Image.fromarray(pixels, "RGB").save(buf, format="PNG")
    return buf.getvalue()


def window_frame_png(size: int = 128, border: int = 10) -> bytes:
    """RGBA frame with a transparent pane and a centre mullion."""
    img = np.zeros((size, size, 4), dtype=np.uint8)
    wood = (92, 64, 40, 255)
    img[:border, :] = wood
    img[-border:, :] = wood
    img[:, :border] = wood
    img[:, -border:] = wood
    mid = size // 2
    img[mid - border // 4 : mid + border // 4, :] = wood
    img[:, mid - border // 4 : mid + border // 4] = wood
    buf = io.BytesIO()
    Image.fromarray(img, "RGBA").save(buf, format="PNG")
    return buf.getvalue()


def _pad(data: bytes, fill: bytes) -> bytes:
    return data + fill * (-len(data) % 4)


def unit_cube_glb(extras: dict) -> bytes:
    """Binary glTF 2.0 unit cube with ``extras`` stored on the asset."""
    verts = _CUBE_VERTS.tobytes()
    faces = _CUBE_FACES.tobytes()
    binary = _pad(verts, b"\x00") + _pad(faces, b"\x00")
    doc = {
        "asset": {"version": "2.0", "generator": "cineforge-mock", "extras": extras},
        "scene": 0,
        "scenes": [{"nodes": [0]}],
        "nodes": [{"mesh": 0}],
        "meshes": [{"primitives": [{"attributes": {"POSITION": 0}, "indices": 1}]}],
        "buffers": [{"byteLength": len(binary)}],
        "bufferViews": [
            {"buffer": 0, "byteOffset": 0, "byteLength": len(verts), "target": 34962},
            {"buffer": 0, "byteOffset": len(_pad(verts, b"\x00")), "byteLength": len(faces), "target": 34963},
        ],
        "accessors": [
            {
                "bufferView": 0, "componentType": 5126, "count": 8, "type": "VEC3",
                "min": [-0.5, -0.5, -0.5], "max": [0.5, 0.5, 0.5],
            },
            {"bufferView": 1, "componentType": 5123, "count": 36, "type": "SCALAR"},
        ],
    }
    js = _pad(json.dumps(doc, sort_keys=True, separators=(",", ":")).encode("utf-8"), b" ")
    total = 12 + 8 + len(js) + 8 + len(binary)
    return (
        struct.pack("<4sII", b"glTF", 2, total)
        + struct.pack("<I4s", len(js), b"JSON") + js
        + struct.pack("<I4s", len(binary), b"BIN\x00") + binary
    )


def glb_extras(blob: bytes) -> dict:
    (length,) = struct.unpack_from("<I", blob, 12)
    return json.loads(blob[20 : 20 + length])["asset"].get("extras", {})
