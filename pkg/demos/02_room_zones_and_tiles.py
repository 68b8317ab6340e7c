"""Load a room scan, look at its placement zones and tile one wall.

Small entities land in a 2 m square under the screen; large ones go beside
or behind the viewer, clear of the line of sight to the screen.
"""

import numpy as np
from _paths import SIMPLE_ROOM

from cineforge import load_simple_scan, placement_zones, tile_surface

room = load_simple_scan(SIMPLE_ROOM.read_bytes())
print("anchors:", ", ".join(f"{a.name}({a.label})" for a in room.anchors))
print("screen center:", tuple(round(c, 3) for c in room.screen.center))

zones = placement_zones(room)
gen = np.random.default_rng(0)
small = zones.sample_small(gen, 5, 0.0)
large = zones.sample_large(gen, 5, 0.5)
print("\nsmall-zone samples:", small)
print("large-zone samples:", large)
print(f"large zone floor area: {zones.large_area():.3f} m^2")
assert not any(zones.in_frustum(p) for p in large)

wall = room.by_label("wall")[0]
tiling = tile_surface(wall)
print(f"\n{wall.name}: {tiling.width:.2f} x {tiling.height:.2f} m -> {len(tiling.tiles)} tiles")
for tile in tiling.tiles[:5]:
    print(f"  row {tile.row} col {tile.col} center {tile.center_world}")
