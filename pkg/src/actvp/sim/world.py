"""Planar pick-and-place world: scene construction and physics-lite stepping.

Kinematics only: the gripper rate-limits toward commanded targets, a grasp
model attaches/releases objects, and everything notable lands in an ordered
event log that the failure classifier consumes later.
"""
from __future__ import annotations

import copy
from dataclasses import dataclass, field

import numpy as np

# workspace extents (meters)
WORKSPACE_X = 1.0
WORKSPACE_Y = 0.6
WORKSPACE_Z = 0.3

GRID_X = (0.30, 0.50, 0.70)
GRID_Y = (0.15, 0.30, 0.45)

# fixed destination tray for scenarios 1-2 (x0, y0, x1, y1)
DEFAULT_REGION = (0.80, 0.05, 0.95, 0.25)

HOME_POSITION = (0.50, 0.55, 0.25)
SAFE_Z = 0.25

APERTURE_MAX = 0.14          # mirrors a 140 mm stroke
MAX_SPEED = 0.05             # m per step, per axis
MAX_APERTURE_SPEED = 0.02    # m per step

GRASP_Z_WINDOW = 0.02        # |gripper z - object height| tolerance
ATTACH_SQUEEZE = 0.005       # aperture must reach width - this to attach
SQUEEZE_LIMIT = 0.015        # aperture cannot close below width - this
RELEASE_OPEN = 0.015         # aperture >= width + this releases
LOOSE_MARGIN = 0.01          # grip margin above this risks slip
ATTEMPT_RADIUS = 0.06        # xy distance for a close to count as an attempt
GENTLE_PLACE_Z = 0.03        # release above height + this is a drop
DESCENT_CONTACT_Z = 0.05     # region-contact checked below height + this

CATEGORY_SPECS = {
    "rigid-box-large": dict(footprint=(0.080, 0.055), height=0.090,
                            grasp_tolerance=0.020, slip_prob=0.0,
                            base_color=(204, 172, 120)),
    "rigid-box-small": dict(footprint=(0.050, 0.038), height=0.055,
                            grasp_tolerance=0.012, slip_prob=0.0,
                            base_color=(110, 176, 105)),
    "reflective-bottle": dict(footprint=(0.042, 0.042), height=0.120,
                              grasp_tolerance=0.015, slip_prob=0.0,
                              base_color=(178, 72, 48)),
    "slippery-jar": dict(footprint=(0.040, 0.040), height=0.050,
                         grasp_tolerance=0.010, slip_prob=0.05,
                         base_color=(235, 233, 228)),
    "flexible-bowl": dict(footprint=(0.090, 0.090), height=0.045,
                          grasp_tolerance=0.008, slip_prob=0.0,
                          base_color=(186, 188, 212)),
}

PICKABLE_CATEGORIES = ("rigid-box-large", "rigid-box-small", "reflective-bottle", "slippery-jar")

# scenario 2/3 composition: one bowl plus two of each pickable category
DIVERSE_MIX = ("flexible-bowl",) + tuple(c for c in PICKABLE_CATEGORIES for _ in range(2))

EVENT_KINDS = ("grasp-attempt", "grasp-attach", "slip", "drop", "release",
               "region-contact", "wall-contact")


@dataclass
class ObjectInstance:
    id: int
    category: str
    position: tuple  # (x, y) meters
    yaw: float
    footprint: tuple  # (w, h) meters
    height: float
    color: tuple  # RGB8
    grasp_tolerance: float
    slip_prob: float

    @property
    def width(self):
        return self.footprint[0]

    def rect(self):
        x, y = self.position
        w, h = self.footprint
        return (x - w / 2, y - h / 2, x + w / 2, y + h / 2)


@dataclass
class GripperState:
    position: tuple  # (x, y, z)
    aperture: float
    holding: int | None = None


@dataclass
class SimEvent:
    step_index: int
    kind: str
    payload: dict = field(default_factory=dict)


@dataclass
class Scene:
    objects: list
    gripper: GripperState
    region: tuple  # (x0, y0, x1, y1)
    rng_seed: int
    scenario: int
    step_index: int = 0
    events: list = field(default_factory=list)

    def object_by_id(self, oid):
        for o in self.objects:
            if o.id == oid:
                return o
        raise KeyError(f"unknown object id {oid}")

    def copy(self):
        return copy.deepcopy(self)

    def log(self, kind, **payload):
        assert kind in EVENT_KINDS
        self.events.append(SimEvent(self.step_index, kind, payload))


def rects_overlap(a, b, margin=0.0):
    return not (a[2] + margin <= b[0] or b[2] + margin <= a[0]
                or a[3] + margin <= b[1] or b[3] + margin <= a[1])


def rect_inside(inner, outer):
    return (inner[0] >= outer[0] and inner[1] >= outer[1]
            and inner[2] <= outer[2] and inner[3] <= outer[3])


def _make_object(oid, category, position, rng):
    spec = CATEGORY_SPECS[category]
    jitter = rng.integers(-25, 26, size=3)
    color = tuple(int(np.clip(c + j, 0, 255)) for c, j in zip(spec["base_color"], jitter))
    return ObjectInstance(
        id=oid, category=category, position=position, yaw=0.0,
        footprint=spec["footprint"], height=spec["height"], color=color,
        grasp_tolerance=spec["grasp_tolerance"], slip_prob=spec["slip_prob"],
    )


def make_scene(scenario, seed):
    """Build scenario 1 (uniform grid), 2 (diverse grid) or 3 (diverse free placement)."""
    if scenario not in (1, 2, 3):
        raise ValueError(f"unknown scenario {scenario}")
    rng = np.random.default_rng([int(seed), scenario])
    grid = [(x, y) for y in GRID_Y for x in GRID_X]
    objects = []
    region = DEFAULT_REGION
    if scenario == 1:
        for i, pos in enumerate(grid):
            objects.append(_make_object(i, "rigid-box-large", pos, rng))
    elif scenario == 2:
        cats = list(DIVERSE_MIX)
        order = rng.permutation(len(cats))
        for i, pos in enumerate(grid):
            objects.append(_make_object(i, cats[order[i]], pos, rng))
    else:
        cats = list(DIVERSE_MIX)
        order = rng.permutation(len(cats))
        attempts = 0
        for i in range(9):
            cat = cats[order[i]]
            w, h = CATEGORY_SPECS[cat]["footprint"]
            while True:
                attempts += 1
                if attempts > 10_000:
                    raise RuntimeError("rejection sampling exceeded 10000 attempts; workspace too full")
                x = rng.uniform(0.10 + w / 2, 0.90 - w / 2)
                y = rng.uniform(0.05 + h / 2, 0.55 - h / 2)
                cand = (x - w / 2, y - h / 2, x + w / 2, y + h / 2)
                if all(not rects_overlap(cand, o.rect(), margin=0.01) for o in objects):
                    break
            objects.append(_make_object(i, cat, (x, y), rng))
        while True:
            attempts += 1
            if attempts > 10_000:
                raise RuntimeError("rejection sampling exceeded 10000 attempts; workspace too full")
            rw = rng.uniform(0.10, 0.18)
            rh = rng.uniform(0.10, 0.18)
            x0 = rng.uniform(0.02, WORKSPACE_X - 0.02 - rw)
            y0 = rng.uniform(0.02, WORKSPACE_Y - 0.02 - rh)
            cand = (x0, y0, x0 + rw, y0 + rh)
            if all(not rects_overlap(cand, o.rect(), margin=0.01) for o in objects):
                region = cand
                break
    gripper = GripperState(position=HOME_POSITION, aperture=APERTURE_MAX, holding=None)
    return Scene(objects=objects, gripper=gripper, region=region,
                 rng_seed=int(seed), scenario=scenario)


def _clamp_target(action):
    x, y, z, a = action
    return (float(np.clip(x, 0.0, WORKSPACE_X)), float(np.clip(y, 0.0, WORKSPACE_Y)),
            float(np.clip(z, 0.0, WORKSPACE_Z)), float(np.clip(a, 0.0, APERTURE_MAX)))


def _rate_limit(cur, tgt, max_delta):
    return cur + float(np.clip(tgt - cur, -max_delta, max_delta))


def step(scene, action, rng):
    """Advance one control step toward the (x, y, z, aperture) target."""
    action = tuple(float(v) for v in action)
    if not all(np.isfinite(action)) or len(action) != 4:
        raise ValueError(f"non-finite action {action}")
    tx, ty, tz, ta = _clamp_target(action)
    g = scene.gripper
    x0, y0, z0 = g.position
    a0 = g.aperture
    x1 = _rate_limit(x0, tx, MAX_SPEED)
    y1 = _rate_limit(y0, ty, MAX_SPEED)
    z1 = _rate_limit(z0, tz, MAX_SPEED)
    a1 = _rate_limit(a0, ta, MAX_APERTURE_SPEED)

    held = scene.object_by_id(g.holding) if g.holding is not None else None
    if held is not None:
        # cannot squeeze through the object
        a1 = max(a1, held.width - SQUEEZE_LIMIT)

    g.position = (x1, y1, z1)
    g.aperture = a1

    if held is not None:
        held.position = (x1, y1)
        if (x1 in (0.0, WORKSPACE_X)) or (y1 in (0.0, WORKSPACE_Y)):
            scene.log("wall-contact", object=held.id)
        margin = a1 - (held.width - SQUEEZE_LIMIT)
        moved = abs(x1 - x0) + abs(y1 - y0) > 1e-9
        if moved and margin > LOOSE_MARGIN and held.slip_prob > 0.0 and rng.random() < held.slip_prob:
            scene.log("slip", object=held.id, margin=margin)
            scene.log("drop", object=held.id, cause="slip",
                      in_region=rect_inside(held.rect(), scene.region))
            g.holding = None
            held = None
        elif a1 >= held.width + RELEASE_OPEN:
            if z1 <= held.height + GENTLE_PLACE_Z:
                scene.log("release", object=held.id,
                          in_region=rect_inside(held.rect(), scene.region))
            else:
                scene.log("drop", object=held.id, cause="released-high",
                          in_region=rect_inside(held.rect(), scene.region))
            g.holding = None
            held = None
        else:
            descending = z1 < z0 - 1e-9
            if descending and z1 < held.height + DESCENT_CONTACT_Z:
                r = held.rect()
                if rects_overlap(r, scene.region) and not rect_inside(r, scene.region):
                    scene.log("region-contact", object=held.id)
    else:
        closing = a1 < a0 - 1e-12
        if closing and scene.gripper.holding is None:
            # nearest object within the attempt radius whose z window matches;
            # lateral offset is per-axis (fingers close along one axis)
            best = None
            best_d = ATTEMPT_RADIUS
            for o in scene.objects:
                d = max(abs(x1 - o.position[0]), abs(y1 - o.position[1]))
                if d <= best_d and abs(z1 - o.height) <= GRASP_Z_WINDOW:
                    best, best_d = o, d
            if best is not None:
                thr = best.width - ATTACH_SQUEEZE
                if a0 > thr >= a1:
                    scene.log("grasp-attempt", object=best.id, offset=best_d,
                              tolerance=best.grasp_tolerance)
                    if best_d <= best.grasp_tolerance:
                        scene.gripper.holding = best.id
                        best.position = (x1, y1)
                        scene.gripper.aperture = max(a1, best.width - SQUEEZE_LIMIT)
                        scene.log("grasp-attach", object=best.id, offset=best_d)

    scene.step_index += 1
    return scene


def scene_to_json(scene):
    return {
        "objects": [
            {
                "id": o.id, "category": o.category, "position": list(o.position),
                "yaw": o.yaw, "footprint": list(o.footprint), "height": o.height,
                "color": list(o.color), "grasp_tolerance": o.grasp_tolerance,
                "slip_prob": o.slip_prob,
            }
            for o in scene.objects
        ],
        "gripper": {
            "position": list(scene.gripper.position),
            "aperture": scene.gripper.aperture,
            "holding": scene.gripper.holding,
        },
        "region": list(scene.region),
        "rng_seed": scene.rng_seed,
        "scenario": scene.scenario,
        "step_index": scene.step_index,
    }


def scene_from_json(doc):
    objects = [
        ObjectInstance(
            id=d["id"], category=d["category"], position=tuple(d["position"]),
            yaw=d["yaw"], footprint=tuple(d["footprint"]), height=d["height"],
            color=tuple(d["color"]), grasp_tolerance=d["grasp_tolerance"],
            slip_prob=d["slip_prob"],
        )
        for d in doc["objects"]
    ]
    gripper = GripperState(
        position=tuple(doc["gripper"]["position"]),
        aperture=doc["gripper"]["aperture"],
        holding=doc["gripper"]["holding"],
    )
    return Scene(objects=objects, gripper=gripper, region=tuple(doc["region"]),
                 rng_seed=doc["rng_seed"], scenario=doc["scenario"],
                 step_index=doc["step_index"])
