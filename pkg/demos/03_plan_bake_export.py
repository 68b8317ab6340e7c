"""Plan a clip against a room, bake assets with mock providers, export a manifest.

Everything is written to a temporary directory. The second bake is served
from the content-addressed cache and yields the same artifacts.
"""

import tempfile
from pathlib import Path

from _paths import CLIPS, SIMPLE_ROOM

from cineforge import ClipInfo, Feature, MockAnalysisProvider, analyze_clip, build_plan, clip_hash, export_manifest, load_simple_scan, probe_duration
from cineforge.assets import AssetCache, Providers, execute_jobs, plan_jobs

clip = CLIPS / "medium.mp4"
provider = MockAnalysisProvider(CLIPS)
docs = [analyze_clip(clip, f, provider) for f in Feature]
room = load_simple_scan(SIMPLE_ROOM.read_bytes())
info = ClipInfo(clip_hash(clip.read_bytes()), probe_duration(clip.read_bytes()), "Hollow Pines")

plan = build_plan(docs, room, info, seed=11)
print(f"particles {len(plan.particles)}, objects {len(plan.objects)}, characters {len(plan.characters)}, "
      f"textures {len(plan.textures)}, windows {len(plan.window)}, effects {len(plan.effects)}")
for spawn in plan.objects + plan.characters:
    print(f"  {spawn.entity_kind:9s} x{spawn.count:<2d} size {spawn.size_ratio:<4} {spawn.motion.pattern:8s} {spawn.description[:40]}")

graph = plan_jobs(plan)
with tempfile.TemporaryDirectory() as tmp:
    tmp = Path(tmp)
    cache = AssetCache(tmp / "cache")
    first = execute_jobs(graph, Providers.mock(), cache, parallelism=4)
    records = execute_jobs(graph, Providers.mock(), cache, parallelism=1)
    entries = sum(1 for p in cache.root.iterdir() if p.is_dir())
    print(f"baked {len(records)} jobs into {entries} cache entries")
    print("second bake identical:", [r.sha256 for r in first] == [r.sha256 for r in records])
    manifest = export_manifest(plan, records, tmp / "export" / "manifest.json")
    ok = sum(e.status == "ok" for e in manifest.assets.values())
    print(f"manifest lists {len(manifest.assets)} assets, {ok} ok")
