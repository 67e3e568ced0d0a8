"""Pick/place bounding-box prompts baked into front-camera frames.

A prompt box is an axis-aligned pixel rectangle; overlay() paints its 2-px
perimeter (green for pick, red for place) inward from the rect edge, leaving
every other pixel untouched.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .sim.render import RES, world_to_front_px

PICK_COLOR = (0, 255, 0)
PLACE_COLOR = (255, 0, 0)
LINE_WIDTH = 2


@dataclass(frozen=True)
class PromptBox:
    role: str  # "pick" | "place"
    rect: tuple  # (x0, y0, x1, y1) pixel coords, x1/y1 exclusive

    def __post_init__(self):
        if self.role not in ("pick", "place"):
            raise ValueError(f"unknown prompt role {self.role!r}")
        x0, y0, x1, y1 = self.rect
        if not (isinstance(x0, int) and isinstance(y0, int)
                and isinstance(x1, int) and isinstance(y1, int)):
            raise ValueError(f"rect must be integer pixels, got {self.rect}")

    def validate(self, width=RES, height=RES):
        x0, y0, x1, y1 = self.rect
        if not (0 <= x0 < x1 <= width and 0 <= y0 < y1 <= height):
            raise ValueError(f"rect out of bounds: {self.rect} for {width}x{height}")

    def to_json(self):
        return {"role": self.role, "rect": list(self.rect)}

    @staticmethod
    def from_json(doc):
        box = PromptBox(role=doc["role"], rect=tuple(int(v) for v in doc["rect"]))
        return box


def perimeter_mask(rect, width=RES, height=RES):
    """Boolean mask of the 2-px inward perimeter band of rect."""
    x0, y0, x1, y1 = rect
    m = np.zeros((height, width), dtype=bool)
    m[y0:y1, x0:x1] = True
    ix0, iy0, ix1, iy1 = x0 + LINE_WIDTH, y0 + LINE_WIDTH, x1 - LINE_WIDTH, y1 - LINE_WIDTH
    if ix1 > ix0 and iy1 > iy0:
        m[iy0:iy1, ix0:ix1] = False
    return m


def overlay(image, boxes):
    """Return a copy of `image` with prompt perimeters drawn (place over pick)."""
    img = np.asarray(image)
    if img.dtype != np.uint8 or img.ndim != 3 or img.shape[2] != 3:
        raise ValueError(f"expected HxWx3 uint8 image, got {img.dtype} {img.shape}")
    h, w = img.shape[:2]
    picks = [b for b in boxes if b.role == "pick"]
    places = [b for b in boxes if b.role == "place"]
    if len(picks) > 1 or len(places) > 1:
        raise ValueError("at most one pick and one place box")
    for b in boxes:
        b.validate(w, h)
    out = img.copy()
    for b in picks + places:  # place drawn after pick
        color = PICK_COLOR if b.role == "pick" else PLACE_COLOR
        out[perimeter_mask(b.rect, w, h)] = color
    return out


def box_from_object(scene, object_id, role="pick"):
    """Tight front-camera projection of the object footprint, dilated 2 px."""
    obj = scene.object_by_id(object_id)
    x0, y0, x1, y1 = obj.rect()
    u0, v0 = world_to_front_px(x0, y0)
    u1, v1 = world_to_front_px(x1, y1)
    rect = (
        max(0, int(np.floor(u0)) - 2),
        max(0, int(np.floor(v0)) - 2),
        min(RES, int(np.ceil(u1)) + 2),
        min(RES, int(np.ceil(v1)) + 2),
    )
    return PromptBox(role=role, rect=rect)


def box_from_region(region, role="place"):
    """Front-camera projection of a world-space destination rectangle."""
    u0, v0 = world_to_front_px(region[0], region[1])
    u1, v1 = world_to_front_px(region[2], region[3])
    rect = (
        max(0, int(np.floor(u0))),
        max(0, int(np.floor(v0))),
        min(RES, int(np.ceil(u1))),
        min(RES, int(np.ceil(v1))),
    )
    return PromptBox(role=role, rect=rect)


def box_world_center(box):
    """World (x, y) of a front-camera prompt box center."""
    x0, y0, x1, y1 = box.rect
    u = (x0 + x1) / 2
    v = (y0 + y1) / 2
    from .sim.world import WORKSPACE_X, WORKSPACE_Y
    return u * WORKSPACE_X / RES, v * WORKSPACE_Y / RES
