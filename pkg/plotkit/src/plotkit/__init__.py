"""Batch figure generation from simulation snapshot directories.

Consumes the checksummed CSV snapshot formats written by the simulation
suite (``# vk-micro v1`` particle tables and ``# vk-macro v1`` field
tables) and renders the standard figure types: orientation-colored scatter
mosaics, snapshot sequences, density heatmaps with direction quivers,
order-parameter time series, and animations.
"""

from .snapshots import (
    MacroSnapshot,
    MicroSnapshot,
    SnapshotError,
    read_snapshot,
    scan_dir,
)
from .colormap import angle_cmap, angle_to_rgb

__all__ = [
    "MacroSnapshot",
    "MicroSnapshot",
    "SnapshotError",
    "angle_cmap",
    "angle_to_rgb",
    "read_snapshot",
    "scan_dir",
]
