"""Acceptance criteria, one test per criterion.

Each test prints a PASS/FAIL line (also collected into the terminal summary).
Run alone with ``pytest tests/test_acceptance.py -v -s``.
"""

from __future__ import annotations

import hashlib
import itertools
import json
import math
import time
from contextlib import contextmanager
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path

import numpy as np
import pytest

from cineforge.assets import plan_jobs
from cineforge.assets.jobs import ENTITY_RESOLUTION
from cineforge.cli import run_command
from cineforge.descriptors import Feature
from cineforge.planner import (
    ClipInfo,
    brightness_multiplier,
    build_plan,
    clamp_size,
    flicker_factor,
    particle_rate,
    resolve_quantity,
)
from cineforge.playback import AugmentationManifest, entity_position, load_manifest, state_at
from cineforge.prompts import LISTING, assemble_prompt, build_entity_prompt, build_texture_prompt, limit_description, listing
from cineforge.room import PlaneAnchor, load_simple_scan, tile_surface
from cineforge.timeline import MIN_SEGMENT, active_at, merge, normalize

from conftest import ACCEPTANCE_LINES, GOLDEN, TIERS, cli_all_args, floor_only_room, make_doc


@contextmanager
def criterion(number: int, title: str, limit: float | None = None):
    start = time.perf_counter()
    try:
        yield
        elapsed = time.perf_counter() - start
        if limit is not None:
            assert elapsed < limit, f"took {elapsed:.2f}s, limit {limit}s"
    except BaseException as exc:
        line = f"FAIL criterion {number:>2}: {title} ({type(exc).__name__}: {str(exc).splitlines()[0] if str(exc) else ''})"
        ACCEPTANCE_LINES.append(line)
        print(line)
        raise
    line = f"PASS criterion {number:>2}: {title} ({elapsed:.2f}s)"
    ACCEPTANCE_LINES.append(line)
    print(line)


def run_all(tier: str, out: Path, *extra: str) -> Path:
    assert run_command(cli_all_args(tier, out, *extra)) == 0
    return out


def asset_hashes(out: Path) -> dict[str, str]:
    return {
        p.relative_to(out).as_posix(): hashlib.sha256(p.read_bytes()).hexdigest()
        for p in sorted((out / "assets").rglob("*"))
        if p.is_file()
    }


# --------------------------------------------------------------------------


RATE_TABLE = {
    "rain": (50, 100, 150, 250),
    "snow": (100, 200, 300, 600),
    "dust": (4, 7, 10, 15),
    "smoke": (4, 7, 10, 15),
    "fog": (4, 7, 10, 15),
}
DENSITIES = ("sparse", "moderate", "dense", "torrential")


def test_c01_particle_rate_table():
    with criterion(1, "particle-rate table exact (20 type x density pairs)", limit=1.0):
        for ptype, rates in RATE_TABLE.items():
            for density, rate in zip(DENSITIES, rates):
                assert particle_rate(ptype, density) == rate, (ptype, density)


def quantity_oracle(label: str, size: float) -> int:
    base = {"a_few": 2, "several": 4, "many": 10, "countless": 20}[label]
    exact = Decimal(base) / Decimal(str(size))
    return max(1, min(20, int(exact.quantize(Decimal(1), rounding=ROUND_HALF_UP))))


def test_c02_quantity_law():
    with criterion(2, "quantity law max(1, min(20, round(base/size)))", limit=1.0):
        for size in (0.02, 0.05, 0.1, 0.5, 1.0, 1.3):
            for label in ("a_few", "several", "many", "countless"):
                assert resolve_quantity(label, size) == quantity_oracle(label, size), (label, size)
        # hand-checked corners
        assert resolve_quantity("a_few", 1.3) == 2
        assert resolve_quantity("many", 1.0) == 10
        assert resolve_quantity("countless", 0.5) == 20


def test_c03_size_cap():
    with criterion(3, "size cap min(x, 1.3) on 10^4 random positive x"):
        gen = np.random.default_rng(2024)
        xs = np.exp(gen.uniform(math.log(1e-6), math.log(1e3), 10_000))
        for x in xs.tolist():
            assert clamp_size(x) == min(x, 1.3)


def test_c04_brightness_mapping():
    with criterion(4, "brightness map, whiteout x2, 10^5 flicker samples in [0.4, 2.0]", limit=5.0):
        levels = ("very_dark", "dark", "normal", "bright", "overexposed")
        assert [brightness_multiplier(x) for x in levels] == [0.25, 0.5, 1.0, 2.0, 4.0]

        room = floor_only_room()
        clip = ClipInfo("c4", 10.0)
        for level in levels:
            lighting = make_doc("lighting", [(0, 10, {"brightness_level": level, "color_mood": "neutral", "dominant_color_hex": "#FFFFFF"})])
            boom = make_doc("effective_light", [(2, 4, {"type": "explosion", "color_hex": "#FFFFFF", "motion": "static", "intensity": "high"})])
            plan = build_plan([lighting, boom], room, clip)
            manifest = AugmentationManifest(plan, {})
            assert state_at(manifest, 3.0).brightness == 2 * brightness_multiplier(level)
            assert state_at(manifest, 5.0).brightness == brightness_multiplier(level)

        samples = np.fromiter(
            (flicker_factor(seed, k) for seed in range(100) for k in range(1000)), dtype=float, count=100_000
        )
        assert samples.min() >= 0.4 and samples.max() <= 2.0


def frustum_oracle(p, room) -> bool:
    """Is p strictly inside the pyramid from the eye to the screen rectangle (0.3 m margin)?"""
    eye = np.array([room.viewer_origin[0], room.floor.position[1] + 1.2, room.viewer_origin[2]])
    sc = room.screen
    depth = sc.center[2] - eye[2]
    dz = p[2] - eye[2]
    if dz <= 0 or dz >= depth:
        return False
    hit = eye + (np.asarray(p) - eye) * (depth / dz)
    cy = sc.center[1]
    return abs(hit[0] - sc.center[0]) < sc.width / 2 + 0.3 and abs(hit[1] - cy) < sc.height / 2 + 0.3


def random_room(gen):
    w, d = gen.uniform(3.0, 7.0, 2)
    cx = gen.uniform(-(w / 2 - 0.5), w / 2 - 0.5)
    cz = gen.uniform(2.5 - d / 2, d / 2 - 0.5)
    anchors = [{"name": "floor", "position": [cx, 0, cz], "size": [w, 0, d], "rotation": [0, 0, 0]}]
    if gen.uniform() < 0.3:
        anchors.append({"name": "screen", "position": [gen.uniform(-0.3, 0.3), gen.uniform(1.0, 1.5), gen.uniform(1.8, 2.4)],
                        "size": [gen.uniform(1.0, 2.0), gen.uniform(0.5, 1.0), 0], "rotation": [0, 0, 0]})
    return load_simple_scan(json.dumps(anchors))


def test_c05_placement_soundness():
    with criterion(5, "placement soundness over 10^3 seeded plans", limit=30.0):
        gen = np.random.default_rng(5)
        checked = {"large": 0, "small": 0}
        for i in range(1000):
            room = random_room(gen)
            size = float(np.round(gen.choice([gen.uniform(0.02, 0.5), gen.uniform(0.5001, 2.0)]), 4))
            air = bool(gen.integers(2))
            obj = {"description": "crate", "position": "in_the_air" if air else "on_the_floor",
                   "quantity": str(gen.choice(["a_few", "several", "many", "countless"])), "size": size,
                   "motion_details": {"pattern": "static"}}
            char = {"description": "guard", "motion": "moving", "quantity": "a_few", "size": size}
            docs = [make_doc("objects", [(0, 5, obj)]), make_doc("characters", [(0, 5, char)])]
            plan = build_plan(docs, room, ClipInfo(f"c5-{i}", 5.0), seed=i)
            sc = room.screen
            for spawn in (*plan.objects, *plan.characters):
                height = 0.5 if spawn.position == "in_the_air" else 0.0
                for p in spawn.placements:
                    if spawn.size_ratio > 0.5:
                        assert not frustum_oracle(p, room), (i, p)
                        checked["large"] += 1
                    else:
                        assert abs(p[0] - sc.center[0]) <= 1.0 and abs(p[2] - sc.center[2]) <= 1.0, (i, p)
                        checked["small"] += 1
                    assert p[1] == height
        assert min(checked.values()) > 1000


def test_c06_tiling():
    with criterion(6, "5x5 tiling on 100 random surfaces: area and overlap", limit=5.0):
        gen = np.random.default_rng(6)
        for i in range(100):
            kind = ["floor", "ceiling", "wall"][i % 3]
            a, b = gen.uniform(0.3, 12.0, 2)
            size = (a, 0.0, b) if kind != "wall" else (a, b, 0.0)
            anchor = PlaneAnchor(kind, tuple(gen.uniform(-3, 3, 3)), size, tuple(gen.uniform(-180, 180, 3)))
            tiling = tile_surface(anchor)
            assert len(tiling.tiles) == 25
            area = a * b
            rects = []
            for t in tiling.tiles:
                (u, v), (tw, th) = t.center_local, t.extent
                rects.append((u - tw / 2, u + tw / 2, v - th / 2, v + th / 2))
            assert abs(sum((r[1] - r[0]) * (r[3] - r[2]) for r in rects) - area) / area <= 1e-6
            for r, s in itertools.combinations(rects, 2):
                ox = min(r[1], s[1]) - max(r[0], s[0])
                oy = min(r[3], s[3]) - max(r[2], s[2])
                assert ox <= 1e-9 * a or oy <= 1e-9 * b
            # tiles cover exactly the surface extent
            assert min(r[0] for r in rects) == pytest.approx(-a / 2) and max(r[1] for r in rects) == pytest.approx(a / 2)
            assert min(r[2] for r in rects) == pytest.approx(-b / 2) and max(r[3] for r in rects) == pytest.approx(b / 2)


PAYLOAD = {
    "particles": {"type": "rain", "density": "dense"},
    "lighting": {"brightness_level": "dark", "color_mood": "cool", "dominant_color_hex": "#102030"},
    "body": "scaled lizard skin",
}


def test_c07_timeline_invariants():
    with criterion(7, "timeline invariants on 10^3 fuzzed documents, 10^4 active_at queries", limit=30.0):
        gen = np.random.default_rng(7)
        duration = 60.0
        timelines = []
        for i in range(1000):
            feature = ["particles", "lighting", "body"][i % 3]
            n = int(gen.integers(0, 8))
            segs = []
            for _ in range(n):
                s = float(np.round(gen.uniform(-5, 70), 2))
                e = float(np.round(s + gen.uniform(0.01, 25), 2))
                payload = None if gen.uniform() < 0.15 else PAYLOAD[feature]
                segs.append((max(s, 0.0), e, payload))
            segs = [(s, e, p) for s, e, p in segs if e > s]
            tl = normalize(make_doc(feature, segs, mode="lenient"), duration)
            prev = 0.0
            for entry in tl.entries:
                iv = entry.interval
                assert 0 <= iv.start < iv.end <= duration
                assert iv.start >= prev
                assert iv.end - iv.start >= MIN_SEGMENT - 1e-9
                prev = iv.end
            timelines.append(tl)

        queries = 0
        for group in range(0, 1000, 3):
            trio = timelines[group : group + 3]
            sched = merge(trio, duration)
            ts = gen.uniform(0, duration, 30).tolist()
            boundaries = [e.time for e in sched.events]
            for t in ts + boundaries[:10]:
                expected = {
                    (tl.feature, i)
                    for tl in trio
                    for i, e in enumerate(tl.entries)
                    if e.interval.start <= t < e.interval.end
                }
                assert active_at(sched, t) == expected
                queries += 1
        assert queries >= 10_000


def test_c08_determinism(tmp_path):
    with criterion(8, "full run twice and at parallelism 1 vs 8: byte-identical", limit=60.0):
        a = run_all("complex", tmp_path / "a")
        b = run_all("complex", tmp_path / "b")
        c = run_all("complex", tmp_path / "c", "--parallelism", "8")
        for other in (b, c):
            assert (a / "manifest.json").read_bytes() == (other / "manifest.json").read_bytes()
            assert (a / "simulation.ndjson").read_bytes() == (other / "simulation.ndjson").read_bytes()
            assert asset_hashes(a) == asset_hashes(other)
        records = json.loads((a / "records.json").read_text())
        assert records and all(r["status"] == "ok" for r in records)


def test_c09_prompt_fidelity(tmp_path):
    with criterion(9, "prompts byte-match golden listings; descriptions < 900 chars"):
        golden = GOLDEN / "prompts"
        for path in sorted(golden.glob("*.txt")):
            assert listing(path.stem).encode("utf-8") == path.read_bytes(), path.name
        for feature in Feature:
            bundle = assemble_prompt(feature)
            assert bundle.common_rules.encode() == (golden / "common_rules.txt").read_bytes()
            assert bundle.feature_prompt.encode() == (golden / f"{LISTING[feature]}.txt").read_bytes()
        texture = (golden / "texture_template.txt").read_text()
        assert build_texture_prompt("floor", []) == texture.replace("{surface type}", "floor")
        entity = build_entity_prompt("object", "KEYWORDS", "MOVIE")
        template = (golden / "entity_template.txt").read_text()
        rebuilt = template.rstrip("'").replace("\\n", "\n")
        rebuilt = rebuilt.replace("{object | character}", "object").replace("{keywords}", "KEYWORDS").replace("{movie name}", "MOVIE")
        assert entity == rebuilt

        gen = np.random.default_rng(9)
        words = "armor visor plate scratched chrome helmet glowing red eye cape weathered leather".split()
        for _ in range(500):
            n = int(gen.integers(1, 400))
            text = " ".join(gen.choice(words, n).tolist())
            text = ". ".join(text[i : i + 60] for i in range(0, len(text), 60))
            assert len(limit_description(text)) < 900
        for tier in TIERS:
            manifest = json.loads((GOLDEN / tier / "manifest.json").read_text())
            for entry in manifest["assets"].values():
                if entry["kind"] == "entity_image":
                    assert entry["description"] and len(entry["description"]) < 900


def test_c10_character_constraints(tmp_path):
    with criterion(10, "character images 1024x1536, wander within +-0.5 m/s at fixed y, frame offset 0.01"):
        out = run_all("complex", tmp_path / "out")
        manifest = load_manifest(out / "manifest.json")
        plan = manifest.plan
        assert ENTITY_RESOLUTION["character"] == "1024x1536"
        for spawn in plan.characters:
            assert manifest.assets[spawn.image_asset].kind == "entity_image"
        jobs = {j.job_id: j for j in plan_jobs(plan)}
        for spawn in plan.characters:
            assert jobs[spawn.image_asset].params["resolution"] == "1024x1536"
        for spawn in plan.objects:
            assert jobs[spawn.image_asset].params["resolution"] == "1024x1024"

        wanderers = [s for s in plan.characters if s.motion.pattern == "wander"]
        assert wanderers
        for spawn in wanderers:
            iv = spawn.interval
            for inst in range(spawn.count):
                y0 = spawn.placements[inst][1]
                prev = entity_position(spawn, inst, iv.start)
                for t in np.arange(iv.start + 0.1, iv.end, 0.1):
                    pos = entity_position(spawn, inst, float(t))
                    assert pos[1] == y0
                    vx, vy, vz = spawn.motion.velocity_at(float(t) - iv.start, inst)
                    assert -0.5 <= vx <= 0.5 and -0.5 <= vz <= 0.5 and vy == 0.0
                    step = np.subtract(pos, prev)
                    assert np.all(np.abs(step) <= 0.5 * 0.1 + 1e-9)
                    prev = pos

        assert plan.window
        for win in plan.window:
            assert win.frame_offset == 0.01
            anchor = plan.room.anchor(win.window)
            assert np.allclose(np.subtract(win.frame_position, anchor.position), 0.01 * np.asarray(win.forward), atol=1e-6)


def test_c11_end_to_end_golden(tmp_path):
    with criterion(11, "three fixture clips compile to golden manifests and NDJSON streams", limit=60.0):
        for tier in TIERS:
            out = run_all(tier, tmp_path / tier)
            assert (out / "manifest.json").read_bytes() == (GOLDEN / tier / "manifest.json").read_bytes(), tier
            assert (out / "simulation.ndjson").read_bytes() == (GOLDEN / tier / "simulation.ndjson").read_bytes(), tier
            assert asset_hashes(out) == json.loads((GOLDEN / tier / "asset_hashes.json").read_text()), tier
            # the stream replays the schedule exactly
            manifest = load_manifest(out / "manifest.json")
            lines = [json.loads(x) for x in (out / "simulation.ndjson").read_text().splitlines()]
            events = [x for x in lines if x["type"] == "event"]
            assert len(events) == len(manifest.plan.schedule.events)
            samples = [x for x in lines if x["type"] == "sample"]
            assert len(samples) == int(manifest.plan.schedule.clip_duration / 0.5) + 1
