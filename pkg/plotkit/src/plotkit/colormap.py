"""Cyclic angle colormap.

Headings live on the circle, so the two ends of the value range must meet:
theta = -pi and theta = +pi are the same direction and get the same color.
The map walks the HSV hue wheel at full saturation, which keeps equal
angular steps visually equal.  Density fields use a perceptually uniform
sequential map instead (chosen at the render sites).
"""

from __future__ import annotations

import numpy as np
from matplotlib.colors import ListedColormap, hsv_to_rgb

TWO_PI = 2.0 * np.pi


def angle_to_rgb(theta) -> np.ndarray:
    """RGB colors for angles in radians; exactly periodic in 2*pi.

    The hue is ((theta + pi) / 2*pi) mod 1, so -pi and +pi (and any pair of
    angles differing by a full turn) produce bit-identical colors.
    """
    theta = np.asarray(theta, dtype=np.float64)
    hue = ((theta + np.pi) / TWO_PI) % 1.0
    hsv = np.stack([hue, np.ones_like(hue), np.ones_like(hue)], axis=-1)
    return hsv_to_rgb(hsv)


def angle_cmap(n: int = 256) -> ListedColormap:
    """Colormap for colorbars; sampled on [-pi, pi) so the wrap is seamless."""
    theta = -np.pi + TWO_PI * np.arange(n) / n
    return ListedColormap(angle_to_rgb(theta), name="cyclic_hue")
