"""Compile the simple tier end to end and replay it as an NDJSON stream.

This drives the CLI's ``all`` command, then steps through the manifest the
way a headset runtime would, printing what is active and how bright the
room should be.
"""

import io
import tempfile
from pathlib import Path

from _paths import CLIPS, SIMPLE_ROOM

from cineforge import load_manifest, simulate
from cineforge.cli import run_command
from cineforge.playback import state_at, write_ndjson

with tempfile.TemporaryDirectory() as tmp:
    out = Path(tmp) / "out"
    code = run_command(["all", "--clip", str(CLIPS / "simple.mp4"), "--room", str(SIMPLE_ROOM),
                        "--movie", "Night Train", "--seed", "7", "--out", str(out)])
    print("cineforge all exited with", code)
    manifest = load_manifest(out / "manifest.json")

    buf = io.StringIO()
    n = write_ndjson(simulate(manifest, 10.0, 14.0, 1.0), buf)
    print(f"\n{n} records between 10 s and 14 s:")
    print(buf.getvalue(), end="")

    print("\nbrightness every 5 s:")
    for t in range(0, 31, 5):
        s = state_at(manifest, float(t))
        print(f"  {t:2d}s  x{s.brightness:<5} {len(s.active)} active")
