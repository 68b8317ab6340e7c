"""Per-feature timelines and the merged master schedule.

Intervals are half-open ``[start, end)`` so adjacent segments never both
count as active at their shared boundary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

from . import canonical
from .descriptors import (
    Descriptor,
    Feature,
    FeatureDocument,
    Segment,
    TimeSegment,
    is_plannable,
)
from .errors import DurationMismatch, OutOfRange

MIN_SEGMENT = 0.1
_EPS = 1e-9


@dataclass(frozen=True)
class TimelineEntry:
    interval: TimeSegment
    payload: Descriptor


@dataclass(frozen=True)
class FeatureTimeline:
    feature: Feature
    entries: tuple[TimelineEntry, ...] = ()


@dataclass(frozen=True)
class ScheduleEvent:
    time: float
    kind: str  # "start" | "stop"
    feature: Feature
    segment_index: int

    def sort_key(self) -> tuple:
        return (self.time, 0 if self.kind == "stop" else 1, self.feature.order, self.segment_index)


@dataclass(frozen=True)
class MasterSchedule:
    clip_duration: float
    events: tuple[ScheduleEvent, ...] = ()


def normalize(doc: FeatureDocument, clip_duration: float) -> FeatureTimeline:
    """Clamp, sort and de-overlap a parsed document.

    Null or incomplete payloads are dropped. Overlaps are resolved in favour
    of the segment that starts first: the later one starts where the earlier
    one ends, and anything shorter than ``MIN_SEGMENT`` afterwards is dropped.
    """
    # clamp to the representable grid point at or below the clip end
    duration = canonical.quantize(math.floor(clip_duration * 10**canonical.DECIMALS + 1e-6) / 10**canonical.DECIMALS)
    candidates = []
    for i, seg in enumerate(doc.segments):
        if not is_plannable(doc.feature, seg.payload):
            continue
        start = max(0.0, seg.interval.start)
        end = min(seg.interval.end, duration)
        candidates.append((start, i, end, seg.payload))
    candidates.sort(key=lambda c: (c[0], c[1]))

    entries: list[TimelineEntry] = []
    reach = 0.0
    for start, _, end, payload in candidates:
        start = max(start, reach)
        if end - start < MIN_SEGMENT - _EPS:
            continue
        entries.append(TimelineEntry(TimeSegment(start, end), payload))
        reach = end
    return FeatureTimeline(doc.feature, tuple(entries))


def timeline_document(timeline: FeatureTimeline) -> FeatureDocument:
    """View a timeline as a document again (for re-normalization)."""
    return FeatureDocument(
        timeline.feature, tuple(Segment(e.interval, e.payload) for e in timeline.entries)
    )


def merge(timelines: Iterable[FeatureTimeline], clip_duration: float) -> MasterSchedule:
    timelines = list(timelines)
    seen = set()
    events = []
    for tl in timelines:
        if tl.feature in seen:
            raise ValueError(f"duplicate timeline for {tl.feature.value}")
        seen.add(tl.feature)
        for i, entry in enumerate(tl.entries):
            if entry.interval.end > clip_duration + _EPS:
                raise DurationMismatch(
                    f"{tl.feature.value}#{i} ends at {entry.interval.end}, after clip end {clip_duration}"
                )
            events.append(ScheduleEvent(entry.interval.start, "start", tl.feature, i))
            events.append(ScheduleEvent(entry.interval.end, "stop", tl.feature, i))
    events.sort(key=ScheduleEvent.sort_key)
    return MasterSchedule(clip_duration, tuple(events))


def active_at(schedule: MasterSchedule, t: float) -> set[tuple[Feature, int]]:
    """Segments whose interval contains ``t``."""
    if not 0 <= t <= schedule.clip_duration:
        raise OutOfRange(f"t={t} outside [0, {schedule.clip_duration}]")
    active: set[tuple[Feature, int]] = set()
    for ev in schedule.events:
        if ev.time > t:
            break
        key = (ev.feature, ev.segment_index)
        if ev.kind == "start":
            active.add(key)
        else:
            active.discard(key)
    return active
