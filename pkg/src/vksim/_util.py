"""Small shared helpers: angle wrapping, unit vectors, thread configuration."""

from __future__ import annotations

import logging
import os

import numpy as np

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * np.pi


def wrap_angle(theta):
    """Wrap angles to the half-open interval (-pi, pi].

    Accepts scalars or arrays.  The right endpoint is kept closed so that a
    heading of exactly pi is representable without aliasing to -pi.
    """
    w = np.mod(theta, TWO_PI)          # [0, 2*pi)
    w = np.where(w > np.pi, w - TWO_PI, w)
    if np.ndim(theta) == 0:
        return float(w)
    return w


def unit_vector(theta):
    """Heading angle(s) -> unit vector(s) (cos, sin), shape (..., 2)."""
    return np.stack([np.cos(theta), np.sin(theta)], axis=-1)


def configure_threads() -> int:
    """Apply the VK_THREADS cap to the compiled-kernel thread pool.

    The simulation kernels are serial by design (fixed accumulation order,
    bitwise-reproducible results), so this is a cap, not a request: the
    effective parallelism never exceeds min(VK_THREADS, available cores).
    Returns the thread count in effect.
    """
    raw = os.environ.get("VK_THREADS")
    import numba

    available = numba.config.NUMBA_NUM_THREADS
    if raw is None:
        return available
    try:
        requested = int(raw)
    except ValueError:
        logger.warning("ignoring non-integer VK_THREADS=%r", raw)
        return available
    if requested < 1:
        logger.warning("ignoring VK_THREADS=%d (must be >= 1)", requested)
        return available
    effective = min(requested, available)
    numba.set_num_threads(effective)
    return effective
