"""Dense point-sampling overlap oracle for oriented boxes.

Independent of the separating-axis implementation: samples a uniform grid
of points across each box (edges included) and tests containment in the
other box by direct coordinate rotation. Misses only overlaps thinner than
the grid spacing, which is why disagreements are expected to concentrate
at near-tangencies.
"""

from __future__ import annotations

import numpy as np


def _grid_points(cx, cy, yaw, length, width, per_side):
    xs = np.linspace(-length / 2.0, length / 2.0, per_side)
    ys = np.linspace(-width / 2.0, width / 2.0, per_side)
    gx, gy = np.meshgrid(xs, ys)
    c, s = np.cos(yaw), np.sin(yaw)
    px = cx + gx * c - gy * s
    py = cy + gx * s + gy * c
    return px.ravel(), py.ravel()


def _contains(px, py, cx, cy, yaw, length, width):
    c, s = np.cos(yaw), np.sin(yaw)
    dx = px - cx
    dy = py - cy
    lx = dx * c + dy * s
    ly = -dx * s + dy * c
    return np.any(
        (np.abs(lx) <= length / 2.0) & (np.abs(ly) <= width / 2.0)
    )


def sampled_overlap(a, b, per_side: int = 100) -> bool:
    """True when any sampled point of b lies in a, or vice versa.

    ``a`` and ``b`` expose center, yaw, length, width (the Obb fields).
    per_side=100 gives the 10^4-point grid per box.
    """
    bx, by = _grid_points(b.center[0], b.center[1], b.yaw, b.length, b.width, per_side)
    if _contains(bx, by, a.center[0], a.center[1], a.yaw, a.length, a.width):
        return True
    ax, ay = _grid_points(a.center[0], a.center[1], a.yaw, a.length, a.width, per_side)
    return bool(
        _contains(ax, ay, b.center[0], b.center[1], b.yaw, b.length, b.width)
    )
