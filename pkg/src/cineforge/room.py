"""Physical room model: scanned planes, the virtual screen, tiling and
placement zones.

World frame: Y up, +Z points from the viewer toward the screen, origin at the
viewer's floor projection. Anchor rotations are intrinsic yaw-pitch-roll in
degrees (yaw about Y, then pitch about the new X, then roll about the new Z).

Plane conventions in an anchor's local frame: floors and ceilings span local
X (``size[0]``) and Z (``size[2]``) with normals +Y / -Y; every other plane
spans local X (``size[0]``) and Y (``size[1]``) with its forward normal +Z.
"""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.spatial.transform import Rotation

from . import canonical
from .errors import MissingFloor, NotASurface, SchemaError, UnresolvableMesh, ZoneEmpty

Vec3 = tuple[float, float, float]

LABELS = ("floor", "ceiling", "wall", "window", "screen")
SURFACE_LABELS = ("floor", "ceiling", "wall")
GRID = 5

# default virtual display, taken from a typical living-room viewing setup
SCREEN_DISTANCE = 2.0
SCREEN_WIDTH = 1.21
SCREEN_HEIGHT = 0.68
SCREEN_BOTTOM = 0.8

EYE_HEIGHT = 1.2
FRUSTUM_MARGIN = 0.3
SMALL_ZONE_HALF = 1.0


def _vec(value, name: str) -> Vec3:
    if not isinstance(value, (list, tuple)) or len(value) != 3:
        raise SchemaError(f"{name} must be a 3-vector")
    out = []
    for v in value:
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not np.isfinite(v):
            raise SchemaError(f"{name} must contain finite numbers")
        out.append(canonical.quantize(v))
    return tuple(out)


def _label(name: str) -> str:
    key = name.strip().lower()
    for label in LABELS:
        if key == label or key.startswith(label + "_") or key.startswith(label + " "):
            return label
    return "other"


@dataclass(frozen=True)
class PlaneAnchor:
    name: str
    position: Vec3
    size: Vec3 = (0.0, 0.0, 0.0)
    rotation: Vec3 = (0.0, 0.0, 0.0)  # pitch, yaw, roll

    def __post_init__(self):
        if any(s < 0 for s in self.size):
            raise SchemaError(f"anchor {self.name!r} has a negative size component")

    @property
    def label(self) -> str:
        return _label(self.name)

    @property
    def horizontal(self) -> bool:
        return self.label in ("floor", "ceiling")

    @property
    def extent(self) -> tuple[float, float]:
        """In-plane (width, height)."""
        return (self.size[0], self.size[2]) if self.horizontal else (self.size[0], self.size[1])

    def matrix(self) -> np.ndarray:
        pitch, yaw, roll = self.rotation
        return Rotation.from_euler("YXZ", [yaw, pitch, roll], degrees=True).as_matrix()

    def to_world(self, u: float, v: float) -> np.ndarray:
        local = np.array([u, 0.0, v]) if self.horizontal else np.array([u, v, 0.0])
        return np.asarray(self.position) + self.matrix() @ local

    def forward(self) -> np.ndarray:
        if self.label == "floor":
            local = (0.0, 1.0, 0.0)
        elif self.label == "ceiling":
            local = (0.0, -1.0, 0.0)
        else:
            local = (0.0, 0.0, 1.0)
        return self.matrix() @ np.array(local)

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "position": list(self.position),
            "size": list(self.size),
            "rotation": list(self.rotation),
        }


@dataclass(frozen=True)
class Screen:
    center: Vec3
    width: float
    height: float

    @property
    def bottom(self) -> float:
        return self.center[1] - self.height / 2


@dataclass(frozen=True)
class RoomModel:
    anchors: tuple[PlaneAnchor, ...]
    screen: Screen
    viewer_origin: Vec3 = (0.0, 0.0, 0.0)
    # local location only; the mesh identity is its hash
    mesh_path: str | None = field(default=None, compare=False)
    mesh_sha256: str | None = None

    @property
    def floor(self) -> PlaneAnchor:
        return next(a for a in self.anchors if a.label == "floor")

    def by_label(self, label: str) -> list[PlaneAnchor]:
        return [a for a in self.anchors if a.label == label]

    def anchor(self, name: str) -> PlaneAnchor:
        for a in self.anchors:
            if a.name == name:
                return a
        raise KeyError(name)


def _default_screen(floor_y: float, viewer: Vec3) -> Screen:
    center = (
        viewer[0],
        canonical.quantize(floor_y + SCREEN_BOTTOM + SCREEN_HEIGHT / 2),
        canonical.quantize(viewer[2] + SCREEN_DISTANCE),
    )
    return Screen(center, SCREEN_WIDTH, SCREEN_HEIGHT)


def _finish(anchors: list[PlaneAnchor], screen: Screen | None, viewer: Vec3, **extra) -> RoomModel:
    floors = [a for a in anchors if a.label == "floor"]
    if not floors:
        raise MissingFloor("room scan contains no floor")
    if len(floors) > 1:
        raise SchemaError(f"room scan contains {len(floors)} floors; exactly one is required")
    if screen is None:
        screen = _default_screen(floors[0].position[1], viewer)
    return RoomModel(tuple(anchors), screen, viewer, **extra)


def load_simple_scan(raw: bytes | str) -> RoomModel:
    """Build a room from an anchor-list scan.

    Each record is ``{name, position, size, rotation}``. An anchor named
    ``screen`` defines the virtual display (``position`` = center, ``size`` =
    width, height); without one a default screen 2 m ahead is synthesized.
    """
    try:
        data = json.loads(raw)
    except (ValueError, UnicodeDecodeError) as exc:
        raise SchemaError(f"room scan is not valid JSON: {exc}") from None
    if not isinstance(data, list):
        raise SchemaError("room scan must be an array of anchors")
    anchors, screen = [], None
    for i, rec in enumerate(data):
        if not isinstance(rec, dict) or not isinstance(rec.get("name"), str) or not rec["name"].strip():
            raise SchemaError(f"anchor {i} needs a non-empty name")
        anchor = PlaneAnchor(
            rec["name"],
            _vec(rec.get("position"), f"anchor {i} position"),
            _vec(rec.get("size", [0, 0, 0]), f"anchor {i} size"),
            _vec(rec.get("rotation", [0, 0, 0]), f"anchor {i} rotation"),
        )
        if anchor.label == "screen":
            if screen is not None:
                raise SchemaError("room scan contains more than one screen")
            screen = Screen(anchor.position, anchor.size[0], anchor.size[1])
        else:
            anchors.append(anchor)
    return _finish(anchors, screen, (0.0, 0.0, 0.0))


def serialize_simple_scan(room: RoomModel) -> bytes:
    records = [a.to_json() for a in room.anchors]
    records.append(
        PlaneAnchor("screen", room.screen.center, (room.screen.width, room.screen.height, 0.0)).to_json()
    )
    return canonical.dumps(records).encode("utf-8")


# --------------------------------------------------------------------------
# tiling


@dataclass(frozen=True)
class Tile:
    row: int
    col: int
    center_local: tuple[float, float]
    extent: tuple[float, float]
    center_world: Vec3


@dataclass(frozen=True)
class SurfaceTiling:
    surface: str
    width: float
    height: float
    tiles: tuple[Tile, ...]

    def quantized(self) -> "SurfaceTiling":
        """Copy rounded to the manifest's precision (for embedding in plans)."""
        q = canonical.quantize
        return SurfaceTiling(
            self.surface,
            q(self.width),
            q(self.height),
            tuple(
                Tile(t.row, t.col, (q(t.center_local[0]), q(t.center_local[1])), (q(t.extent[0]), q(t.extent[1])), t.center_world)
                for t in self.tiles
            ),
        )


def tile_surface(anchor: PlaneAnchor) -> SurfaceTiling:
    """Split a floor, ceiling or wall into a 5x5 grid of equal tiles."""
    if anchor.label not in SURFACE_LABELS:
        raise NotASurface(f"{anchor.name!r} ({anchor.label}) is not a floor, ceiling or wall")
    width, height = anchor.extent
    tw, th = width / GRID, height / GRID
    tiles = []
    for row in range(GRID):
        for col in range(GRID):
            u = -width / 2 + (col + 0.5) * tw
            v = -height / 2 + (row + 0.5) * th
            world = tuple(canonical.quantize(c) for c in anchor.to_world(u, v))
            tiles.append(Tile(row, col, (u, v), (tw, th), world))
    return SurfaceTiling(anchor.name, width, height, tuple(tiles))


# --------------------------------------------------------------------------
# placement zones


def _overlap(lo: float, hi: float) -> float:
    return max(0.0, hi - lo)


@dataclass(frozen=True)
class PlacementZones:
    """Where spawned entities may go.

    Small entities: a 2 m x 2 m square centered on the screen's floor
    projection. Large entities: room floor area beside or behind the viewer,
    outside the (margin-inflated) pyramid from the viewer's eye to the screen
    and outside the small square, so the two zones never share a point.
    """

    floor_y: float
    small_center: tuple[float, float]
    eye: Vec3
    screen_z: float
    screen_x: tuple[float, float]
    screen_y: tuple[float, float]
    viewer: tuple[float, float]
    lateral_limit: float
    bounds: tuple[float, float, float, float]  # xmin, xmax, zmin, zmax

    def in_small(self, p) -> bool:
        cx, cz = self.small_center
        return abs(p[0] - cx) <= SMALL_ZONE_HALF and abs(p[2] - cz) <= SMALL_ZONE_HALF

    def in_frustum(self, p) -> bool:
        ex, ey, ez = self.eye
        depth = self.screen_z - ez
        s = (p[2] - ez) / depth
        if not 0.0 < s < 1.0:
            return False
        x_lo = ex + s * (self.screen_x[0] - ex)
        x_hi = ex + s * (self.screen_x[1] - ex)
        y_lo = ey + s * (self.screen_y[0] - ey)
        y_hi = ey + s * (self.screen_y[1] - ey)
        return x_lo < p[0] < x_hi and y_lo < p[1] < y_hi

    def _beside_or_behind(self, x: float, z: float) -> bool:
        return z < self.viewer[1] or abs(x - self.viewer[0]) > self.lateral_limit

    def in_large(self, p) -> bool:
        xmin, xmax, zmin, zmax = self.bounds
        return (
            xmin <= p[0] <= xmax
            and zmin <= p[2] <= zmax
            and self._beside_or_behind(p[0], p[2])
            and not self.in_small(p)
            and not self.in_frustum(p)
        )

    def large_area(self) -> float:
        xmin, xmax, zmin, zmax = self.bounds
        vx, vz = self.viewer
        lat = self.lateral_limit
        z0 = max(vz, zmin)
        regions = [
            (xmin, xmax, zmin, min(vz, zmax)),  # behind
            (max(xmin, vx + lat), xmax, z0, zmax),  # right of the viewer
            (xmin, min(xmax, vx - lat), z0, zmax),  # left of the viewer
        ]
        cx, cz = self.small_center
        h = SMALL_ZONE_HALF
        total = 0.0
        for x0, x1, za, zb in regions:
            total += _overlap(x0, x1) * _overlap(za, zb)
            total -= _overlap(max(x0, cx - h), min(x1, cx + h)) * _overlap(max(za, cz - h), min(zb, cz + h))
        return total

    def sample_small(self, rng, n: int, height: float) -> list[Vec3]:
        cx, cz = self.small_center
        xs = rng.uniform(cx - SMALL_ZONE_HALF, cx + SMALL_ZONE_HALF, n)
        zs = rng.uniform(cz - SMALL_ZONE_HALF, cz + SMALL_ZONE_HALF, n)
        y = canonical.quantize(self.floor_y + height)
        return [self._snap(x, y, z, cx, cz) for x, z in zip(xs, zs)]

    def _snap(self, x, y, z, cx, cz) -> Vec3:
        # quantizing can push a boundary sample out by 1e-6; pull it back
        x = min(max(canonical.quantize(x), cx - SMALL_ZONE_HALF), cx + SMALL_ZONE_HALF)
        z = min(max(canonical.quantize(z), cz - SMALL_ZONE_HALF), cz + SMALL_ZONE_HALF)
        return (x, y, z)

    def sample_large(self, rng, n: int, height: float, max_tries: int = 10_000) -> list[Vec3]:
        if self.large_area() <= 0:
            raise ZoneEmpty("room has no floor area beside or behind the viewer")
        xmin, xmax, zmin, zmax = self.bounds
        y = canonical.quantize(self.floor_y + height)
        out: list[Vec3] = []
        tries = 0
        while len(out) < n:
            if tries >= max_tries * n:
                raise ZoneEmpty("could not sample a point beside or behind the viewer")
            tries += 1
            p = (canonical.quantize(rng.uniform(xmin, xmax)), y, canonical.quantize(rng.uniform(zmin, zmax)))
            if self.in_large(p):
                out.append(p)
        return out


def placement_zones(room: RoomModel) -> PlacementZones:
    floor = room.floor
    w, d = floor.extent
    corners = np.array([floor.to_world(su * w / 2, sv * d / 2) for su in (-1, 1) for sv in (-1, 1)])
    vx, vy, vz = room.viewer_origin
    sc = room.screen
    half_w = sc.width / 2 + FRUSTUM_MARGIN
    floor_y = floor.position[1]
    return PlacementZones(
        floor_y=floor_y,
        small_center=(sc.center[0], sc.center[2]),
        eye=(vx, floor_y + EYE_HEIGHT, vz),
        screen_z=sc.center[2],
        screen_x=(sc.center[0] - half_w, sc.center[0] + half_w),
        screen_y=(sc.bottom - FRUSTUM_MARGIN, sc.bottom + sc.height + FRUSTUM_MARGIN),
        viewer=(vx, vz),
        lateral_limit=half_w,
        bounds=(
            float(corners[:, 0].min()),
            float(corners[:, 0].max()),
            float(corners[:, 2].min()),
            float(corners[:, 2].max()),
        ),
    )


# --------------------------------------------------------------------------
# detailed scans


@dataclass(frozen=True)
class ScanInstance:
    label: str
    bbox_min: Vec3
    bbox_max: Vec3
    submesh_id: int | str | None = None


@dataclass(frozen=True)
class DetailedScanManifest:
    mesh: str
    instances: tuple[ScanInstance, ...]
    base_dir: str = "."
    viewer_origin: Vec3 = (0.0, 0.0, 0.0)

    @classmethod
    def load(cls, path: str | Path) -> "DetailedScanManifest":
        path = Path(path)
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except (OSError, ValueError) as exc:
            raise SchemaError(f"cannot read scan manifest {path}: {exc}") from None
        return cls.from_json(data, base_dir=str(path.parent))

    @classmethod
    def from_json(cls, data, base_dir: str = ".") -> "DetailedScanManifest":
        if not isinstance(data, dict) or not isinstance(data.get("mesh"), str):
            raise SchemaError("detailed scan manifest needs a 'mesh' path")
        instances = []
        for i, rec in enumerate(data.get("instances", [])):
            if not isinstance(rec, dict) or not isinstance(rec.get("label"), str) or not rec["label"].strip():
                raise SchemaError(f"instance {i} needs a non-empty label")
            lo = _vec(rec.get("bbox_min"), f"instance {i} bbox_min")
            hi = _vec(rec.get("bbox_max"), f"instance {i} bbox_max")
            if any(a > b for a, b in zip(lo, hi)):
                raise SchemaError(f"instance {i} has bbox_min > bbox_max")
            instances.append(ScanInstance(rec["label"], lo, hi, rec.get("submesh_id")))
        viewer = _vec(data.get("viewer_origin", [0, 0, 0]), "viewer_origin")
        return cls(data["mesh"], tuple(instances), base_dir, viewer)


def mesh_bounds(path: Path) -> tuple[np.ndarray, np.ndarray]:
    """Axis-aligned bounds of an OBJ or binary glTF mesh."""
    suffix = path.suffix.lower()
    if suffix == ".obj":
        verts = []
        for line in path.read_text(encoding="utf-8", errors="replace").splitlines():
            parts = line.split()
            if parts and parts[0] == "v" and len(parts) >= 4:
                verts.append([float(p) for p in parts[1:4]])
        if not verts:
            raise SchemaError(f"{path} has no vertices")
        arr = np.array(verts)
        return arr.min(axis=0), arr.max(axis=0)
    if suffix == ".glb":
        blob = path.read_bytes()
        magic, _, _ = struct.unpack_from("<4sII", blob, 0)
        if magic != b"glTF":
            raise SchemaError(f"{path} is not a binary glTF file")
        chunk_len, _ = struct.unpack_from("<II", blob, 12)
        doc = json.loads(blob[20 : 20 + chunk_len])
        lows, highs = [], []
        for mesh in doc.get("meshes", []):
            for prim in mesh.get("primitives", []):
                acc = doc["accessors"][prim["attributes"]["POSITION"]]
                lows.append(acc["min"])
                highs.append(acc["max"])
        if not lows:
            raise SchemaError(f"{path} has no POSITION accessors")
        return np.min(lows, axis=0), np.max(highs, axis=0)
    raise SchemaError(f"unsupported mesh format {suffix!r} (use .obj or .glb)")


def _instance_anchor(inst: ScanInstance, viewer: Vec3) -> PlaneAnchor:
    lo, hi = np.array(inst.bbox_min), np.array(inst.bbox_max)
    c = (lo + hi) / 2
    ex, ey, ez = (hi - lo).tolist()
    label = _label(inst.label)
    q = canonical.quantize
    if label in ("floor", "ceiling"):
        y = hi[1] if label == "floor" else lo[1]
        return PlaneAnchor(inst.label, (q(c[0]), q(y), q(c[2])), (q(ex), 0.0, q(ez)))
    if label in ("wall", "window"):
        if ex >= ez:
            yaw = 180.0 if c[2] > viewer[2] else 0.0
            size = (q(ex), q(ey), 0.0)
        else:
            yaw = -90.0 if c[0] > viewer[0] else 90.0
            size = (q(ez), q(ey), 0.0)
        return PlaneAnchor(inst.label, (q(c[0]), q(c[1]), q(c[2])), size, (0.0, yaw, 0.0))
    return PlaneAnchor(inst.label, (q(c[0]), q(c[1]), q(c[2])), (q(ex), q(ey), q(ez)))


def load_detailed_scan(manifest: DetailedScanManifest | str | Path) -> RoomModel:
    """Room from a labeled-mesh scan (segmentation already done upstream).

    Anchors come from instance bounding boxes; several floor instances are
    merged into one. The mesh path is kept for export and retexturing.
    """
    if not isinstance(manifest, DetailedScanManifest):
        manifest = DetailedScanManifest.load(manifest)
    mesh_path = (Path(manifest.base_dir) / manifest.mesh).resolve()
    if not mesh_path.is_file():
        raise UnresolvableMesh(f"mesh {manifest.mesh!r} not found under {manifest.base_dir}")
    lo, hi = mesh_bounds(mesh_path)
    tol = 1e-3
    floors, others = [], []
    for inst in manifest.instances:
        if np.any(np.array(inst.bbox_min) < lo - tol) or np.any(np.array(inst.bbox_max) > hi + tol):
            raise SchemaError(f"instance {inst.label!r} lies outside the mesh bounds")
        (floors if _label(inst.label) == "floor" else others).append(inst)
    if not floors:
        raise MissingFloor("detailed scan has no floor instance")
    floor = ScanInstance(
        "floor",
        tuple(np.min([f.bbox_min for f in floors], axis=0).tolist()),
        tuple(np.max([f.bbox_max for f in floors], axis=0).tolist()),
    )
    viewer = manifest.viewer_origin
    anchors, screen = [], None
    for inst in [floor, *others]:
        anchor = _instance_anchor(inst, viewer)
        if anchor.label == "screen":
            screen = Screen(anchor.position, anchor.size[0], anchor.size[1])
        else:
            anchors.append(anchor)
    digest = hashlib.sha256(mesh_path.read_bytes()).hexdigest()
    return _finish(anchors, screen, viewer, mesh_path=str(mesh_path), mesh_sha256=digest)
