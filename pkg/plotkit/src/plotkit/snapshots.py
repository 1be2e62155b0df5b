"""Reader for the simulation suite's CSV snapshot files.

The format is the published interface between the solvers and this
package: a one-line header (``# vk-micro v1 t=<t> n=<n> L=<L>`` or
``# vk-macro v1 t=<t> nx=<nx> ny=<ny> L=<L>``), a column-name row, one CSV
row per particle or cell, and a trailing ``# checksum=<16 hex>`` line
holding an 8-byte BLAKE2b digest of everything before it.  Values are
written with 17 significant digits, so parsing is lossless.
"""

from __future__ import annotations

import hashlib
import io
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np


class SnapshotError(ValueError):
    """A snapshot file is missing, malformed, or fails its checksum."""


_MICRO_HEADER = re.compile(
    r"^# vk-micro v1 t=(?P<t>\S+) n=(?P<n>\d+) L=(?P<L>\S+)$")
_MACRO_HEADER = re.compile(
    r"^# vk-macro v1 t=(?P<t>\S+) nx=(?P<nx>\d+) ny=(?P<ny>\d+) L=(?P<L>\S+)$")
_CHECKSUM = re.compile(r"^# checksum=(?P<sum>[0-9a-f]{16})$")

_MICRO_COLUMNS = "id,x,y,theta,omega"
_MACRO_COLUMNS = "i,j,rho,omega_bar,Omega_x,Omega_y"


@dataclass
class MicroSnapshot:
    t: float
    L: float
    x: np.ndarray       # (n, 2) positions
    theta: np.ndarray   # (n,) headings
    omega: np.ndarray   # (n,) angular velocities

    @property
    def n(self) -> int:
        return self.x.shape[0]


@dataclass
class MacroSnapshot:
    t: float
    L: float
    rho: np.ndarray        # (nx, ny)
    omega_bar: np.ndarray  # (nx, ny)
    Omega: np.ndarray      # (nx, ny, 2) unit direction field


def _load_rows(rows: list[str], path, width: int) -> np.ndarray:
    try:
        data = np.loadtxt(io.StringIO("\n".join(rows)), delimiter=",",
                          ndmin=2)
    except ValueError as e:
        raise SnapshotError(f"{path}: unparsable data rows: {e}") from e
    if data.shape[1] != width:
        raise SnapshotError(f"{path}: expected {width} columns, "
                            f"got {data.shape[1]}")
    return data


def parse_snapshot(text: str, path="<string>") -> MicroSnapshot | MacroSnapshot:
    lines = text.splitlines()
    if len(lines) < 3:
        raise SnapshotError(f"{path}: truncated snapshot")
    m = _CHECKSUM.match(lines[-1])
    if m is None:
        raise SnapshotError(f"{path}: missing checksum line")
    payload = "\n".join(lines[:-1]) + "\n"
    digest = hashlib.blake2b(payload.encode("utf-8"),
                             digest_size=8).hexdigest()
    if digest != m.group("sum"):
        raise SnapshotError(f"{path}: checksum mismatch")

    header, columns, rows = lines[0], lines[1], lines[2:-1]
    hm = _MICRO_HEADER.match(header)
    if hm is not None:
        if columns != _MICRO_COLUMNS:
            raise SnapshotError(f"{path}: unexpected columns {columns!r}")
        n = int(hm.group("n"))
        if len(rows) != n:
            raise SnapshotError(f"{path}: row count {len(rows)} != n={n}")
        data = _load_rows(rows, path, 5)
        return MicroSnapshot(t=float(hm.group("t")), L=float(hm.group("L")),
                             x=data[:, 1:3].copy(), theta=data[:, 3].copy(),
                             omega=data[:, 4].copy())
    hm = _MACRO_HEADER.match(header)
    if hm is not None:
        if columns != _MACRO_COLUMNS:
            raise SnapshotError(f"{path}: unexpected columns {columns!r}")
        nx, ny = int(hm.group("nx")), int(hm.group("ny"))
        if len(rows) != nx * ny:
            raise SnapshotError(
                f"{path}: row count {len(rows)} != nx*ny={nx * ny}")
        data = _load_rows(rows, path, 6)
        rho = data[:, 2].reshape(nx, ny)
        omega_bar = data[:, 3].reshape(nx, ny)
        Omega = data[:, 4:6].reshape(nx, ny, 2)
        return MacroSnapshot(t=float(hm.group("t")), L=float(hm.group("L")),
                             rho=rho, omega_bar=omega_bar, Omega=Omega)
    raise SnapshotError(f"{path}: unrecognized header {header!r}")


def read_snapshot(path) -> MicroSnapshot | MacroSnapshot:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise SnapshotError(f"cannot read snapshot {path}: {e}") from e
    return parse_snapshot(text, path)


def scan_dir(directory) -> list[Path]:
    """Sorted paths of the snapshot files in a run directory."""
    directory = Path(directory)
    if not directory.is_dir():
        raise SnapshotError(f"not a directory: {directory}")
    return sorted(directory.glob("snap_*.csv"))


def load_dir(directory) -> list[MicroSnapshot | MacroSnapshot]:
    """All snapshots of a run directory, in time order."""
    paths = scan_dir(directory)
    if not paths:
        raise SnapshotError(f"no snapshots found in {directory}")
    snaps = [read_snapshot(p) for p in paths]
    kinds = {type(s) for s in snaps}
    if len(kinds) > 1:
        raise SnapshotError(f"mixed snapshot kinds in {directory}")
    return snaps
