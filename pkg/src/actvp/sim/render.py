"""Orthographic 96x96 RGB8 rasterizer for the front and hand cameras."""
from __future__ import annotations

import numpy as np

from .world import WORKSPACE_X, WORKSPACE_Y

RES = 96
HAND_VIEW = 0.24  # meters covered by the hand camera crop

TABLE_COLOR = (209, 203, 193)
OUTSIDE_COLOR = (58, 58, 58)
REGION_FILL = (181, 177, 167)
REGION_EDGE = (118, 118, 118)
FINGER_COLOR = (38, 38, 38)
PALM_COLOR = (90, 90, 90)


def front_scale():
    return RES / WORKSPACE_X, RES / WORKSPACE_Y


def world_to_front_px(x, y):
    """Continuous front-camera pixel coordinates (u right, v down = +y)."""
    return x * RES / WORKSPACE_X, y * RES / WORKSPACE_Y


def _span(lo, hi, scale, offset, limit):
    """Pixel index range [i0, i1) whose centers fall inside [lo, hi) world coords."""
    u0 = (lo - offset) * scale
    u1 = (hi - offset) * scale
    i0 = int(np.ceil(u0 - 0.5))
    i1 = int(np.ceil(u1 - 0.5))
    return max(0, i0), min(limit, i1)


class _View:
    def __init__(self, img, ox, oy, sx, sy):
        self.img = img
        self.ox, self.oy = ox, oy
        self.sx, self.sy = sx, sy

    def fill(self, x0, y0, x1, y1, color):
        c0, c1 = _span(x0, x1, self.sx, self.ox, RES)
        r0, r1 = _span(y0, y1, self.sy, self.oy, RES)
        if c1 > c0 and r1 > r0:
            self.img[r0:r1, c0:c1] = color
        return r0, r1, c0, c1

    def border(self, x0, y0, x1, y1, color, px=1):
        tx = px / self.sx
        ty = px / self.sy
        self.fill(x0, y0, x1, y0 + ty, color)
        self.fill(x0, y1 - ty, x1, y1, color)
        self.fill(x0, y0, x0 + tx, y1, color)
        self.fill(x1 - tx, y0, x1, y1, color)


def _shade(color, f):
    return tuple(int(np.clip(c * f, 0, 255)) for c in color)


def _draw_object(view, obj, speckle_rng):
    x0, y0, x1, y1 = obj.rect()
    r0, r1, c0, c1 = view.fill(x0, y0, x1, y1, obj.color)
    cat = obj.category
    if cat == "rigid-box-large":
        view.border(x0, y0, x1, y1, _shade(obj.color, 0.65))
    elif cat == "rigid-box-small":
        cx, cy = obj.position
        view.fill(cx - 0.006, cy - 0.006, cx + 0.006, cy + 0.006, _shade(obj.color, 0.55))
    elif cat == "reflective-bottle":
        cx = obj.position[0]
        view.fill(cx - 0.004, y0, cx + 0.004, y1, _shade(obj.color, 1.45))
        if r1 > r0 and c1 > c0:
            area = (r1 - r0) * (c1 - c0)
            k = max(1, int(round(0.05 * area)))
            idx = speckle_rng.choice(area, size=min(k, area), replace=False)
            rows = r0 + idx // (c1 - c0)
            cols = c0 + idx % (c1 - c0)
            view.img[rows, cols] = (255, 255, 255)
    elif cat == "slippery-jar":
        view.fill(x0, y0, x1, y0 + 0.012, _shade(obj.color, 0.72))
    elif cat == "flexible-bowl":
        w, h = obj.footprint
        cx, cy = obj.position
        view.border(x0 + w * 0.22, y0 + h * 0.22, x1 - w * 0.22, y1 - h * 0.22,
                    _shade(obj.color, 0.70))


def _draw_gripper(view, gripper):
    gx, gy, _ = gripper.position
    half = gripper.aperture / 2
    view.fill(gx - half - 0.006, gy - 0.010, gx - half, gy + 0.010, FINGER_COLOR)
    view.fill(gx + half, gy - 0.010, gx + half + 0.006, gy + 0.010, FINGER_COLOR)
    view.fill(gx - 0.004, gy - 0.003, gx + 0.004, gy + 0.003, PALM_COLOR)


def render(scene, camera="front"):
    """Rasterize one camera; deterministic given (scene, scene.rng_seed)."""
    if camera not in ("front", "hand"):
        raise ValueError(f"unknown camera {camera!r}")
    img = np.empty((RES, RES, 3), dtype=np.uint8)
    if camera == "front":
        view = _View(img, 0.0, 0.0, RES / WORKSPACE_X, RES / WORKSPACE_Y)
        img[:] = TABLE_COLOR
    else:
        gx, gy, _ = scene.gripper.position
        ox, oy = gx - HAND_VIEW / 2, gy - HAND_VIEW / 2
        view = _View(img, ox, oy, RES / HAND_VIEW, RES / HAND_VIEW)
        img[:] = OUTSIDE_COLOR
        view.fill(0.0, 0.0, WORKSPACE_X, WORKSPACE_Y, TABLE_COLOR)

    r = scene.region
    view.fill(*r, REGION_FILL)
    view.border(*r, REGION_EDGE)

    for obj in scene.objects:
        rng = np.random.default_rng([scene.rng_seed & 0x7FFFFFFF, obj.id, 77])
        _draw_object(view, obj, rng)

    _draw_gripper(view, scene.gripper)
    return img
