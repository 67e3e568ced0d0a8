"""Episode outcome classification from the scene event log.

Success means the annotated object ends fully inside the destination region,
released, with no drop along the way. Failures map to exactly one tag via a
fixed precedence over the event log.
"""
from __future__ import annotations

from dataclasses import dataclass

from .world import rect_inside

FAILURE_TAGS = (
    "wrong-object",
    "finger-misalignment",
    "weak-grasp",
    "too-slippery",
    "placement-failure",
    "placement-misalignment",
    "narrow-destination",
)

NARROW_CLEARANCE = 0.02


@dataclass
class Outcome:
    success: bool
    failure_tag: str | None = None

    def __str__(self):
        return "success" if self.success else f"failure({self.failure_tag})"


def region_clearance(region, footprint):
    rw = region[2] - region[0]
    rh = region[3] - region[1]
    return min((rw - footprint[0]) / 2, (rh - footprint[1]) / 2)


def judge(scene, pick_id, region=None):
    """Classify the finished episode for the annotated object `pick_id`."""
    target = scene.object_by_id(pick_id)  # raises KeyError on unknown id
    if region is None:
        region = scene.region
    ev = scene.events
    attached = [e for e in ev if e.kind == "grasp-attach"]
    target_attached = any(e.payload["object"] == pick_id for e in attached)
    wrong_attached = any(e.payload["object"] != pick_id for e in attached)
    target_slip = any(e.kind == "slip" and e.payload["object"] == pick_id for e in ev)
    target_drop = any(e.kind == "drop" and e.payload["object"] == pick_id for e in ev)
    contact = any(e.kind in ("region-contact", "wall-contact")
                  and e.payload.get("object") == pick_id for e in ev)

    placed = rect_inside(target.rect(), region)
    still_held = scene.gripper.holding == pick_id
    if placed and not target_drop and not still_held and target_attached:
        return Outcome(True)

    if wrong_attached:
        return Outcome(False, "wrong-object")
    if not target_attached:
        return Outcome(False, "finger-misalignment")
    if target_slip:
        tag = "too-slippery" if target.category == "slippery-jar" else "weak-grasp"
        return Outcome(False, tag)
    if target_drop:
        return Outcome(False, "placement-failure")
    if contact and region_clearance(region, target.footprint) < NARROW_CLEARANCE:
        return Outcome(False, "narrow-destination")
    return Outcome(False, "placement-misalignment")
