"""Closed-loop policy execution, attention heatmaps, and scenario evaluation.

Two execution modes: `replan` runs each predicted chunk open-loop and
re-queries when it is exhausted; `ensemble` queries every step and executes
an exponentially decayed convex combination of the overlapping predictions.
Inference always conditions on z = 0 (the prior mean).
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .demos import Task, task_for
from .episodes import NormStats
from .model import ActModel
from .prompting import PromptBox, overlay
from .sim import PICKABLE_CATEGORIES, judge, make_scene, render, step

DEFAULT_DECAY = 0.01


class EnsembleBuffer:
    """Per-future-timestep action predictions with ages; weights exp(-m*age)."""

    def __init__(self, chunk_size, decay=DEFAULT_DECAY):
        self.k = chunk_size
        self.decay = decay
        self.chunks = []  # newest first; chunks[i] was predicted i steps ago

    def push(self, chunk):
        chunk = np.asarray(chunk, dtype=np.float64)
        if chunk.shape[0] != self.k:
            raise ValueError(f"chunk of length {chunk.shape[0]}, expected {self.k}")
        self.chunks.insert(0, chunk)
        del self.chunks[self.k:]

    def action(self):
        """Convex combination of each buffered chunk's entry for this step."""
        preds = np.stack([c[i] for i, c in enumerate(self.chunks)])
        w = np.exp(-self.decay * np.arange(len(preds)))
        w = w / w.sum()
        return w @ preds


def _digest(img):
    return hashlib.sha256(np.ascontiguousarray(img).tobytes()).hexdigest()


@dataclass
class RolloutTrace:
    header: dict
    steps: list = field(default_factory=list)


def rollout_steps(scene, task, model, stats, mode, rng, horizon=150,
                  decay=DEFAULT_DECAY, ablate_prompt=False):
    """Generator driving the policy; yields one record per control step."""
    if mode not in ("replan", "ensemble"):
        raise ValueError(f"unknown mode {mode!r}")
    k = model.config.chunk_size
    buffer = EnsembleBuffer(k, decay) if mode == "ensemble" else None
    plan = None
    z = model.prior_z(1)
    scene = scene.copy()
    boxes = [] if ablate_prompt else task.boxes
    for t in range(horizon):
        front = overlay(render(scene, "front"), boxes)
        hand = render(scene, "hand")
        proprio = np.array([*scene.gripper.position, scene.gripper.aperture])
        predicted = None
        if mode == "ensemble" or plan is None or t % k == 0:
            f = front.astype(np.float64)[None] / 255.0
            h = hand.astype(np.float64)[None] / 255.0
            p = stats.normalize_proprio(proprio)[None]
            pred, _ = model.decode(f, h, p, z)
            predicted = stats.denormalize_actions(pred.data[0])
            if mode == "ensemble":
                buffer.push(predicted)
            else:
                plan = predicted
        action = buffer.action() if mode == "ensemble" else plan[t % k]
        before = len(scene.events)
        step(scene, tuple(action), rng)
        events = scene.events[before:]
        yield {
            "t": t,
            "scene": scene,
            "front": front,
            "hand": hand,
            "front_digest": _digest(front),
            "hand_digest": _digest(hand),
            "proprio": proprio.tolist(),
            "action": [float(v) for v in action],
            "predicted_chunk": None if predicted is None else predicted.tolist(),
            "events": [(e.kind, dict(e.payload)) for e in events],
        }
        released_in_region = any(
            e.kind == "release" and e.payload.get("object") == task.pick_id
            and e.payload.get("in_region") for e in events)
        if released_in_region:
            return


def rollout(scene, task, model, stats, mode="ensemble", rng=None, horizon=150,
            decay=DEFAULT_DECAY, ablate_prompt=False):
    """Run the policy to completion; returns (Outcome, RolloutTrace)."""
    rng = rng if rng is not None else np.random.default_rng(0)
    trace = RolloutTrace(header={
        "scenario": scene.scenario,
        "scene_seed": scene.rng_seed,
        "pick_id": task.pick_id,
        "region": list(task.region),
        "boxes": [b.to_json() for b in task.boxes],
        "mode": mode,
        "decay": decay,
        "chunk_size": model.config.chunk_size,
        "horizon": horizon,
        "ablate_prompt": ablate_prompt,
    })
    final_scene = scene
    for rec in rollout_steps(scene, task, model, stats, mode, rng, horizon,
                             decay, ablate_prompt):
        final_scene = rec.pop("scene")
        rec.pop("front")
        rec.pop("hand")
        trace.steps.append(rec)
    outcome = judge(final_scene, task.pick_id, task.region)
    trace.header["outcome"] = {"success": outcome.success, "failure_tag": outcome.failure_tag}
    return outcome, trace


def save_trace(path, trace):
    with open(path, "w") as f:
        json.dump({"header": trace.header, "steps": trace.steps}, f)


def load_trace(path):
    with open(path) as f:
        doc = json.load(f)
    return RolloutTrace(header=doc["header"], steps=doc["steps"])


def replay_ensemble_actions(trace):
    """Recompute each executed action from the stored chunks (replay oracle)."""
    k = trace.header["chunk_size"]
    decay = trace.header["decay"]
    buffer = EnsembleBuffer(k, decay)
    out = []
    for rec in trace.steps:
        if rec["predicted_chunk"] is not None:
            buffer.push(np.array(rec["predicted_chunk"]))
        out.append(buffer.action())
    return np.array(out)


def first_attached_object(trace):
    for rec in trace.steps:
        for kind, payload in rec["events"]:
            if kind == "grasp-attach":
                return payload["object"]
    return None


# ---------------------------------------------------------------------------
# attention heatmaps


def _bilinear_upsample(patch, out_res):
    """(G, G) patch grid -> (out_res, out_res), align to pixel centers."""
    g = patch.shape[0]
    scale = out_res / g
    coords = (np.arange(out_res) + 0.5) / scale - 0.5
    coords = np.clip(coords, 0.0, g - 1.0)
    i0 = np.floor(coords).astype(int)
    i1 = np.minimum(i0 + 1, g - 1)
    f = coords - i0
    rows = (patch[i0][:, i0] * (1 - f)[None, :] + patch[i0][:, i1] * f[None, :])
    rows1 = (patch[i1][:, i0] * (1 - f)[None, :] + patch[i1][:, i1] * f[None, :])
    return rows * (1 - f)[:, None] + rows1 * f[:, None]


def heatmap(model, front, hand, proprio, stats, layer, head="mean"):
    """Front-camera attention map in [0, 1] from encoder layer `layer`.

    Attention directed from the z and proprio token rows toward the 36
    front-camera visual tokens, averaged per patch, bilinearly upsampled and
    min-max normalized (constant maps return all zeros).
    """
    c = model.config
    if not 0 <= layer < c.encoder_layers:
        raise ValueError(f"layer {layer} out of range [0, {c.encoder_layers})")
    f = np.asarray(front, dtype=np.float64)[None] / 255.0
    h = np.asarray(hand, dtype=np.float64)[None] / 255.0
    p = stats.normalize_proprio(np.asarray(proprio))[None]
    _, rec = model.decode(f, h, p, model.prior_z(1), record_attention=True)
    att = rec.encoder[layer][0]  # (H, T, T)
    if head == "mean":
        att = att.mean(axis=0)
    else:
        att = att[int(head)]
    n = model.tokens_per_cam
    rows = att[0:2, 2:2 + n]  # z and proprio rows toward front tokens
    patch = rows.mean(axis=0).reshape(int(np.sqrt(n)), int(np.sqrt(n)))
    up = _bilinear_upsample(patch, c.image_res)
    lo, hi = float(up.min()), float(up.max())
    if hi - lo < 1e-15:
        return np.zeros_like(up)
    return (up - lo) / (hi - lo)


# ---------------------------------------------------------------------------
# scenario evaluation


@dataclass
class EvalRow:
    scenario: int
    category: str
    trials: int
    successes: int
    failures: dict
    mean_length: float

    @property
    def rate(self):
        return self.successes / self.trials if self.trials else 0.0


@dataclass
class EvalReport:
    rows: list

    def overall_rate(self):
        t = sum(r.trials for r in self.rows)
        s = sum(r.successes for r in self.rows)
        return s / t if t else 0.0

    def to_csv(self, path):
        import csv

        with open(path, "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(["scenario", "category", "trials", "successes", "rate",
                        "failures", "mean_length"])
            for r in self.rows:
                w.writerow([r.scenario, r.category, r.trials, r.successes,
                            f"{r.rate:.3f}", json.dumps(r.failures, sort_keys=True),
                            f"{r.mean_length:.1f}"])

    def table(self):
        lines = [f"{'scenario':>8} {'category':<18} {'trials':>6} {'rate':>6}  failures"]
        for r in self.rows:
            fails = ", ".join(f"{k}:{v}" for k, v in sorted(r.failures.items())) or "-"
            lines.append(f"{r.scenario:>8} {r.category:<18} {r.trials:>6} "
                         f"{r.rate:>6.0%}  {fails}")
        return "\n".join(lines)


def eval_trial_specs(scenario, trials_per_category, seed):
    """Deterministic (category, scene seed, rng) list for an evaluation run."""
    cats = ("rigid-box-large",) if scenario == 1 else PICKABLE_CATEGORIES
    specs = []
    for ci, cat in enumerate(cats):
        for i in range(trials_per_category):
            scene_seed = int(np.random.default_rng([seed, ci, i, 303]).integers(2 ** 31))
            specs.append((cat, scene_seed, [seed, ci, i, 404]))
    return specs


def evaluate(model, stats, scenario, trials_per_category, seed, mode="ensemble",
             horizon=150, decay=DEFAULT_DECAY):
    """Seeded trials per pickable category; flexible-bowl is never a target."""
    by_cat = {}
    for cat, scene_seed, rng_key in eval_trial_specs(scenario, trials_per_category, seed):
        scene = make_scene(scenario, scene_seed)
        rng = np.random.default_rng(rng_key)
        candidates = [o.id for o in scene.objects if o.category == cat]
        pick = int(candidates[rng.integers(len(candidates))])
        task = task_for(scene, pick)
        outcome, trace = rollout(scene, task, model, stats, mode=mode, rng=rng,
                                 horizon=horizon, decay=decay)
        slot = by_cat.setdefault(cat, {"n": 0, "s": 0, "fails": {}, "len": 0})
        slot["n"] += 1
        slot["len"] += len(trace.steps)
        if outcome.success:
            slot["s"] += 1
        else:
            slot["fails"][outcome.failure_tag] = slot["fails"].get(outcome.failure_tag, 0) + 1
    rows = [
        EvalRow(scenario=scenario, category=cat, trials=v["n"], successes=v["s"],
                failures=v["fails"], mean_length=v["len"] / v["n"])
        for cat, v in by_cat.items()
    ]
    return EvalReport(rows=rows)
