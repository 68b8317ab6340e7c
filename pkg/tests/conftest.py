from __future__ import annotations

import json
from pathlib import Path

import pytest

from cineforge.descriptors import Feature, parse_feature_document
from cineforge.room import load_simple_scan

TESTS = Path(__file__).resolve().parent
FIXTURES = TESTS / "fixtures"
CLIPS = FIXTURES / "clips"
GOLDEN = TESTS / "golden"
SIMPLE_ROOM = FIXTURES / "rooms" / "simple_room.json"
DETAILED_SCAN = FIXTURES / "rooms" / "detailed" / "scan.json"

# tier -> (clip, room, movie, seed); must match tests/fixtures/make_fixtures.py
TIERS = {
    "simple": (CLIPS / "simple.mp4", SIMPLE_ROOM, "Night Train", 7),
    "medium": (CLIPS / "medium.mp4", SIMPLE_ROOM, "Hollow Pines", 11),
    "complex": (CLIPS / "complex.mp4", DETAILED_SCAN, "Orbital Siege", 23),
}

# outcome lines from tests/test_acceptance.py, echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def make_doc(feature: Feature | str, segments: list[tuple], mode: str = "strict"):
    """Build a document from ``(start, end, payload)`` triples."""
    from cineforge.descriptors import PAYLOAD_KEY

    feature = Feature(feature)
    key = PAYLOAD_KEY[feature]
    raw = [{"timestamp_start": s, "timestamp_end": e, key: p} for s, e, p in segments]
    return parse_feature_document(json.dumps(raw), feature, mode=mode)


def floor_only_room(width: float = 4.1, depth: float = 4.1, center_z: float = 0.5):
    return load_simple_scan(json.dumps([
        {"name": "floor", "position": [0, 0, center_z], "size": [width, 0, depth], "rotation": [0, 0, 0]},
    ]))


def cli_all_args(tier: str, out: Path, *extra: str) -> list[str]:
    clip, room, movie, seed = TIERS[tier]
    return ["all", "--clip", str(clip), "--room", str(room), "--movie", movie,
            "--seed", str(seed), "--out", str(out), "--step", "0.5", *extra]


@pytest.fixture
def simple_room():
    return load_simple_scan(SIMPLE_ROOM.read_bytes())


@pytest.fixture
def default_room():
    return floor_only_room()
