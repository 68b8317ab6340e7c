"""Parse per-feature descriptor files and merge them into one event schedule.

The mock analyzer replays the fixture descriptors stored next to the clip,
so no video model is needed. Overlapping segments in the complex tier are
clipped, and segments past the clip end are trimmed.
"""

from _paths import CLIPS

from cineforge import Feature, MockAnalysisProvider, active_at, analyze_clip, merge, normalize, probe_duration

clip = CLIPS / "complex.mp4"
duration = probe_duration(clip.read_bytes())
provider = MockAnalysisProvider(CLIPS)

timelines = []
for feature in Feature:
    doc = analyze_clip(clip, feature, provider)
    tl = normalize(doc, duration)
    print(f"{feature.value:16s} {len(doc.segments)} segments in, {len(tl.entries)} kept")
    timelines.append(tl)

schedule = merge(timelines, duration)
print(f"\n{len(schedule.events)} events over {duration:.1f} s; first six:")
for ev in schedule.events[:6]:
    print(f"  t={ev.time:6.2f}  {ev.kind:5s} {ev.feature.value}#{ev.segment_index}")

for t in (0.0, 30.0, 75.0):
    active = sorted(f"{f.value}#{i}" for f, i in active_at(schedule, t))
    print(f"active at {t:5.1f}s: {', '.join(active) or '(nothing)'}")
