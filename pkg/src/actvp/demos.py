"""Scripted stochastic expert producing demonstration episodes.

Stands in for human teleoperation: a fixed waypoint script (hover over the
pick box, descend, close, lift, carry to the destination, descend, open,
retreat) with Gaussian waypoint jitter, per-step speed jitter and random
pauses. Failed attempts are discarded and regenerated so every returned
episode passes the judge.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .episodes import Episode
from .prompting import box_from_object, box_from_region, box_world_center
from .sim import (
    PICKABLE_CATEGORIES,
    SAFE_Z,
    judge,
    make_scene,
    render,
    step,
)
from .sim.world import APERTURE_MAX, MAX_SPEED

MAX_ATTEMPTS = 20


@dataclass
class DemoConfig:
    waypoint_noise_sigma: float = 0.008
    speed_jitter: float = 0.2
    pause_prob: float = 0.02
    per_product: int = 10
    horizon: int = 150
    seed: int = 0


@dataclass
class Task:
    pick_id: int
    region: tuple
    boxes: list  # PromptBox list (pick, and place for scenario 3)

    def pick_box(self):
        return next(b for b in self.boxes if b.role == "pick")


def task_for(scene, pick_id):
    """Annotation per protocol: pick box always, place box only in scenario 3."""
    boxes = [box_from_object(scene, pick_id)]
    if scene.scenario == 3:
        boxes.append(box_from_region(scene.region))
    return Task(pick_id=pick_id, region=scene.region, boxes=boxes)


def _waypoints(scene, task, rng, sigma):
    obj = scene.object_by_id(task.pick_id)
    px, py = box_world_center(task.pick_box())
    dx = (task.region[0] + task.region[2]) / 2
    dy = (task.region[1] + task.region[3]) / 2
    gz = obj.height
    pz = obj.height + 0.01

    def jit(*coords):
        return tuple(c + rng.normal(0.0, sigma) for c in coords)

    hx, hy = jit(px, py)
    cx, cy = jit(px, py)
    mx, my = jit(dx, dy)
    ox, oy = jit(dx, dy)
    open_ap = APERTURE_MAX
    # (x, y, z, aperture, phase)
    return [
        (hx, hy, SAFE_Z, open_ap, "hover"),
        (cx, cy, gz + rng.normal(0.0, sigma), open_ap, "descend"),
        (cx, cy, gz, 0.0, "close"),
        (cx, cy, SAFE_Z, 0.0, "lift"),
        (mx, my, SAFE_Z, 0.0, "move"),
        (ox, oy, pz + rng.normal(0.0, sigma), 0.0, "place-descend"),
        (ox, oy, pz, open_ap, "open"),
        (ox, oy, SAFE_Z, open_ap, "retreat"),
    ]


def _run_script(scene, task, config, rng):
    """One scripted attempt; returns (success, frames) with per-step records."""
    waypoints = _waypoints(scene, task, rng, config.waypoint_noise_sigma)
    frames = []
    phase_idx = 0
    for _ in range(config.horizon):
        if phase_idx >= len(waypoints):
            break
        wx, wy, wz, wa, phase = waypoints[phase_idx]
        gx, gy, gz = scene.gripper.position
        if rng.random() < config.pause_prob:
            action = (gx, gy, gz, scene.gripper.aperture)
        else:
            speed = MAX_SPEED * (1.0 + config.speed_jitter * rng.uniform(-1.0, 1.0))
            action = (
                gx + float(np.clip(wx - gx, -speed, speed)),
                gy + float(np.clip(wy - gy, -speed, speed)),
                gz + float(np.clip(wz - gz, -speed, speed)),
                wa,
            )
        frames.append({
            "front": render(scene, "front"),
            "hand": render(scene, "hand"),
            "proprio": (*scene.gripper.position, scene.gripper.aperture),
            "action": action,
        })
        step(scene, action, rng)

        gx, gy, gz = scene.gripper.position
        at_xyz = abs(gx - wx) < 1e-9 and abs(gy - wy) < 1e-9 and abs(gz - wz) < 1e-9
        if phase == "close":
            if scene.gripper.holding == task.pick_id:
                phase_idx += 1
            elif scene.gripper.holding is None and scene.gripper.aperture < 1e-9:
                return False, frames  # closed on nothing
            elif scene.gripper.holding is not None and scene.gripper.holding != task.pick_id:
                return False, frames  # grabbed a neighbor
        elif phase == "open":
            if scene.gripper.holding is None and at_xyz:
                phase_idx += 1
        else:
            if at_xyz:
                if phase in ("lift", "move", "place-descend") and scene.gripper.holding != task.pick_id:
                    return False, frames  # lost the object en route
                phase_idx += 1
    done = phase_idx >= len(waypoints)
    return done and judge(scene, task.pick_id, task.region).success, frames


def demonstrate(scene, task, config, rng):
    """Generate one successful demonstration episode (regenerating failures)."""
    target = scene.object_by_id(task.pick_id)
    if target.category == "flexible-bowl":
        raise ValueError(f"object {task.pick_id} is a flexible-bowl and cannot be a pick target")
    for attempt in range(MAX_ATTEMPTS):
        work = scene.copy()
        ok, frames = _run_script(work, task, config, rng)
        if ok:
            return _episode_from_frames(scene, task, frames, attempt)
    raise RuntimeError(
        f"{MAX_ATTEMPTS} consecutive failed demonstration attempts for object {task.pick_id}")


def _episode_from_frames(scene, task, frames, attempts_used):
    return Episode(
        front=np.stack([f["front"] for f in frames]),
        hand=np.stack([f["hand"] for f in frames]),
        proprio=np.array([f["proprio"] for f in frames], dtype=np.float32),
        actions=np.array([f["action"] for f in frames], dtype=np.float32),
        meta={
            "scenario": scene.scenario,
            "seed": scene.rng_seed,
            "target_id": task.pick_id,
            "target_category": scene.object_by_id(task.pick_id).category,
            "products": [o.category for o in scene.objects],
            "boxes": [b.to_json() for b in task.boxes],
            "region": list(task.region),
            "attempts": attempts_used + 1,
        },
    ).validate()


def generate_demos(scenario, per_product, seed, config=None):
    """The demo dataset for a scenario: `per_product` episodes per pickable product.

    Scenario 1 has a single product (the uniform boxes); targets cycle over
    the grid cells for coverage. Scenarios 2-3 draw a random instance of the
    demo's product from each freshly seeded scene.
    """
    config = config or DemoConfig()
    products = ("rigid-box-large",) if scenario == 1 else PICKABLE_CATEGORIES
    episodes = []
    for ci, cat in enumerate(products):
        for i in range(per_product):
            scene_seed = int(np.random.default_rng([seed, ci, i, 101]).integers(2 ** 31))
            scene = make_scene(scenario, scene_seed)
            rng = np.random.default_rng([seed, ci, i, 202])
            if scenario == 1:
                pick_id = i % len(scene.objects)
            else:
                candidates = [o.id for o in scene.objects if o.category == cat]
                pick_id = int(candidates[rng.integers(len(candidates))])
            task = task_for(scene, pick_id)
            episodes.append(demonstrate(scene, task, config, rng))
    return episodes
