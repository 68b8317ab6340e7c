"""Shared fixture locations for the demo scripts (run them from anywhere)."""

from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
FIXTURES = ROOT / "tests" / "fixtures"
CLIPS = FIXTURES / "clips"
SIMPLE_ROOM = FIXTURES / "rooms" / "simple_room.json"
DETAILED_SCAN = FIXTURES / "rooms" / "detailed" / "scan.json"
