"""Fixture builders: handwritten snapshot files in the documented format."""

import hashlib
import math

import numpy as np
import pytest


def checksum(payload: str) -> str:
    return hashlib.blake2b(payload.encode("utf-8"), digest_size=8).hexdigest()


def g17(v: float) -> str:
    return format(float(v), ".17g")


def write_micro_snapshot(path, t, L, x, theta, omega):
    lines = [f"# vk-micro v1 t={g17(t)} n={len(theta)} L={g17(L)}",
             "id,x,y,theta,omega"]
    for i in range(len(theta)):
        lines.append(f"{i},{g17(x[i][0])},{g17(x[i][1])},"
                     f"{g17(theta[i])},{g17(omega[i])}")
    payload = "\n".join(lines) + "\n"
    path.write_text(payload + f"# checksum={checksum(payload)}\n")


def write_macro_snapshot(path, t, L, rho, omega_bar, Omega):
    nx, ny = rho.shape
    lines = [f"# vk-macro v1 t={g17(t)} nx={nx} ny={ny} L={g17(L)}",
             "i,j,rho,omega_bar,Omega_x,Omega_y"]
    for i in range(nx):
        for j in range(ny):
            lines.append(f"{i},{j},{g17(rho[i, j])},{g17(omega_bar[i, j])},"
                         f"{g17(Omega[i, j, 0])},{g17(Omega[i, j, 1])}")
    payload = "\n".join(lines) + "\n"
    path.write_text(payload + f"# checksum={checksum(payload)}\n")


def make_micro_dir(root, name="micro_run", n_snaps=3, n=40, L=10.0, seed=0):
    """Particles drifting and rotating rigidly over a few snapshots."""
    directory = root / name
    directory.mkdir(parents=True, exist_ok=True)
    rng = np.random.Generator(np.random.Philox(seed))
    x0 = rng.uniform(0.0, L, (n, 2))
    omega = rng.normal(-1.0, 0.2, n)
    for k in range(n_snaps):
        t = 2.0 * k
        theta = (0.3 + 1.1 * t + 0.01 * np.arange(n)) % (2 * math.pi) - math.pi
        x = (x0 + 0.5 * t) % L
        write_micro_snapshot(directory / f"snap_{k:06d}.csv", t, L,
                             x, theta, omega)
    return directory


def make_macro_dir(root, name="macro_run", n_snaps=3, nx=12, ny=10, L=1.0):
    """Smooth density bump with a slowly rotating direction field."""
    directory = root / name
    directory.mkdir(parents=True, exist_ok=True)
    ix = (np.arange(nx) + 0.5) / nx
    iy = (np.arange(ny) + 0.5) / ny
    X, Y = np.meshgrid(ix, iy, indexing="ij")
    for k in range(n_snaps):
        t = 0.5 * k
        rho = 1.0 + 0.4 * np.sin(2 * math.pi * X) * np.cos(2 * math.pi * Y)
        ang = 0.8 * t + 0.3 * np.sin(2 * math.pi * Y)
        Omega = np.stack([np.cos(ang), np.sin(ang)], axis=-1)
        omega_bar = np.full((nx, ny), 0.8)
        write_macro_snapshot(directory / f"snap_{k:06d}.csv", t, L,
                             rho, omega_bar, Omega)
    return directory


@pytest.fixture
def micro_dir(tmp_path):
    return make_micro_dir(tmp_path)


@pytest.fixture
def macro_dir(tmp_path):
    return make_macro_dir(tmp_path)
