"""Snapshot file formats and snapshot sinks.

Two self-describing CSV formats, one per simulation level::

    # vk-micro v1 t=<time> n=<count> L=<box>
    id,x,y,theta,omega
    0,...
    ...
    # checksum=<16 hex digits>

    # vk-macro v1 t=<time> nx=<nx> ny=<ny> L=<box>
    i,j,rho,omega_bar,Omega_x,Omega_y
    0,0,...
    ...
    # checksum=<16 hex digits>

Floats are written with 17 significant digits, so values survive a
write/read cycle bit-exactly and a re-written file is byte-identical.
The checksum (BLAKE2b, 8-byte digest) covers every byte above the checksum
line; readers verify it and also check the row count against the header.
Macro rows are emitted row-major (j varies fastest).
"""

from __future__ import annotations

import hashlib
import io
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import SnapshotError

MICRO_MAGIC = "# vk-micro v1"
MACRO_MAGIC = "# vk-macro v1"

_MICRO_HEADER = re.compile(
    r"^# vk-micro v1 t=(?P<t>\S+) n=(?P<n>\d+) L=(?P<L>\S+)$")
_MACRO_HEADER = re.compile(
    r"^# vk-macro v1 t=(?P<t>\S+) nx=(?P<nx>\d+) ny=(?P<ny>\d+) L=(?P<L>\S+)$")
_CHECKSUM_LINE = re.compile(r"^# checksum=(?P<sum>[0-9a-f]{16})$")

_MICRO_COLUMNS = "id,x,y,theta,omega"
_MACRO_COLUMNS = "i,j,rho,omega_bar,Omega_x,Omega_y"


def _g17(v: float) -> str:
    return format(float(v), ".17g")


def _payload_checksum(payload: str) -> str:
    return hashlib.blake2b(payload.encode("utf-8"), digest_size=8).hexdigest()


@dataclass
class MicroSnapshot:
    t: float
    L: float
    x: np.ndarray       # (n, 2)
    theta: np.ndarray   # (n,)
    omega: np.ndarray   # (n,)

    @property
    def n(self) -> int:
        return self.x.shape[0]

    def to_ensemble(self):
        from .microsim import ParticleEnsemble
        return ParticleEnsemble(self.x.copy(), self.theta.copy(),
                                self.omega.copy())


@dataclass
class MacroSnapshot:
    t: float
    L: float
    rho: np.ndarray        # (nx, ny)
    omega_bar: np.ndarray  # (nx, ny)
    Omega: np.ndarray      # (nx, ny, 2)

    @property
    def shape(self):
        return self.rho.shape

    def to_state(self):
        from .macrosim import MacroState
        return MacroState(self.rho.copy(), self.rho * self.omega_bar,
                          self.rho[:, :, None] * self.Omega)


def format_micro_snapshot(t: float, x, theta, omega, L: float) -> str:
    x = np.asarray(x)
    n = x.shape[0]
    buf = io.StringIO()
    buf.write(f"# vk-micro v1 t={_g17(t)} n={n} L={_g17(L)}\n")
    buf.write(_MICRO_COLUMNS + "\n")
    for i in range(n):
        buf.write(f"{i},{_g17(x[i, 0])},{_g17(x[i, 1])},"
                  f"{_g17(theta[i])},{_g17(omega[i])}\n")
    payload = buf.getvalue()
    return payload + f"# checksum={_payload_checksum(payload)}\n"


def format_macro_snapshot(t: float, rho, omega_bar, Omega, L: float) -> str:
    rho = np.asarray(rho)
    nx, ny = rho.shape
    buf = io.StringIO()
    buf.write(f"# vk-macro v1 t={_g17(t)} nx={nx} ny={ny} L={_g17(L)}\n")
    buf.write(_MACRO_COLUMNS + "\n")
    for i in range(nx):
        for j in range(ny):
            buf.write(f"{i},{j},{_g17(rho[i, j])},{_g17(omega_bar[i, j])},"
                      f"{_g17(Omega[i, j, 0])},{_g17(Omega[i, j, 1])}\n")
    payload = buf.getvalue()
    return payload + f"# checksum={_payload_checksum(payload)}\n"


def _split_checked(text: str, path) -> list[str]:
    lines = text.splitlines()
    if len(lines) < 3:
        raise SnapshotError(f"{path}: truncated snapshot")
    m = _CHECKSUM_LINE.match(lines[-1])
    if m is None:
        raise SnapshotError(f"{path}: missing checksum line")
    payload = "\n".join(lines[:-1]) + "\n"
    actual = _payload_checksum(payload)
    if actual != m.group("sum"):
        raise SnapshotError(
            f"{path}: checksum mismatch (file says {m.group('sum')}, "
            f"payload hashes to {actual})")
    return lines


def parse_snapshot(text: str, path="<string>"):
    """Parse either snapshot format; returns MicroSnapshot or MacroSnapshot."""
    lines = _split_checked(text, path)
    header = lines[0]
    if header.startswith(MICRO_MAGIC):
        m = _MICRO_HEADER.match(header)
        if m is None:
            raise SnapshotError(f"{path}: malformed micro header: {header!r}")
        n = int(m.group("n"))
        if lines[1] != _MICRO_COLUMNS:
            raise SnapshotError(f"{path}: unexpected column row {lines[1]!r}")
        rows = lines[2:-1]
        if len(rows) != n:
            raise SnapshotError(
                f"{path}: row count {len(rows)} does not match n={n}")
        data = np.loadtxt(io.StringIO("\n".join(rows)), delimiter=",",
                          ndmin=2, dtype=np.float64)
        if data.shape != (n, 5):
            raise SnapshotError(f"{path}: bad micro row shape {data.shape}")
        return MicroSnapshot(
            t=float(m.group("t")), L=float(m.group("L")),
            x=np.ascontiguousarray(data[:, 1:3]),
            theta=data[:, 3].copy(), omega=data[:, 4].copy())
    if header.startswith(MACRO_MAGIC):
        m = _MACRO_HEADER.match(header)
        if m is None:
            raise SnapshotError(f"{path}: malformed macro header: {header!r}")
        nx, ny = int(m.group("nx")), int(m.group("ny"))
        if lines[1] != _MACRO_COLUMNS:
            raise SnapshotError(f"{path}: unexpected column row {lines[1]!r}")
        rows = lines[2:-1]
        if len(rows) != nx * ny:
            raise SnapshotError(
                f"{path}: row count {len(rows)} does not match "
                f"nx*ny={nx * ny}")
        data = np.loadtxt(io.StringIO("\n".join(rows)), delimiter=",",
                          ndmin=2, dtype=np.float64)
        if data.shape != (nx * ny, 6):
            raise SnapshotError(f"{path}: bad macro row shape {data.shape}")
        rho = data[:, 2].reshape(nx, ny)
        omega_bar = data[:, 3].reshape(nx, ny)
        Omega = np.stack([data[:, 4].reshape(nx, ny),
                          data[:, 5].reshape(nx, ny)], axis=-1)
        return MacroSnapshot(t=float(m.group("t")), L=float(m.group("L")),
                             rho=rho, omega_bar=omega_bar, Omega=Omega)
    raise SnapshotError(f"{path}: unrecognized header: {header!r}")


def read_snapshot(path):
    path = Path(path)
    return parse_snapshot(path.read_text(encoding="utf-8"), path)


def scan_snapshots(directory) -> list[Path]:
    """All snapshot files in a run directory, in write order."""
    return sorted(Path(directory).glob("snap_*.csv"))


# ----------------------------------------------------------------------------
# sinks
# ----------------------------------------------------------------------------

class FileSink:
    """Writes numbered snapshot files into a directory."""

    def __init__(self, directory):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self.paths: list[Path] = []

    def _next_path(self) -> Path:
        path = self.directory / f"snap_{len(self.paths):06d}.csv"
        self.paths.append(path)
        return path

    def write_micro(self, t, ens, L):
        text = format_micro_snapshot(t, ens.x, ens.theta, ens.omega, L)
        self._next_path().write_text(text, encoding="utf-8")

    def write_macro(self, t, state, L):
        text = format_macro_snapshot(t, state.rho, state.omega_bar,
                                     state.Omega, L)
        self._next_path().write_text(text, encoding="utf-8")


class MemorySink:
    """Keeps snapshot copies in memory; used by tests and the classifier."""

    def __init__(self):
        self.records: list[tuple[float, object]] = []
        self.L: float | None = None

    def write_micro(self, t, ens, L):
        self.L = L
        self.records.append((t, ens.copy()))

    def write_macro(self, t, state, L):
        self.L = L
        self.records.append((t, state.copy()))
