"""HTTP facade: create scenes, submit prompt boxes, stream rollouts, heatmaps.

Sessions are strictly serialized: a non-blocking per-session lock turns
concurrent mutation into 409 conflicts instead of interleaving. Rollout
frames stream as newline-delimited JSON.
"""
from __future__ import annotations

import base64
import io
import json
import threading
import uuid

import numpy as np
from fastapi import FastAPI, HTTPException, Query
from fastapi.responses import Response, StreamingResponse
from PIL import Image
from pydantic import BaseModel

from .demos import Task
from .model import ActModel
from .prompting import PromptBox, box_from_object, overlay
from .runtime import DEFAULT_DECAY, heatmap, rollout_steps
from .sim import judge, make_scene, render, scene_to_json
from .sim.world import WORKSPACE_X, WORKSPACE_Y


def png_b64(img):
    buf = io.BytesIO()
    if img.ndim == 2:
        img = (np.clip(img, 0.0, 1.0) * 255).astype(np.uint8)
        Image.fromarray(img, mode="L").save(buf, format="PNG")
    else:
        Image.fromarray(img, mode="RGB").save(buf, format="PNG")
    return base64.b64encode(buf.getvalue()).decode("ascii")


class SceneRequest(BaseModel):
    scenario: int
    seed: int


class AnnotateRequest(BaseModel):
    boxes: list[dict]


class RolloutRequest(BaseModel):
    mode: str = "ensemble"
    horizon: int = 150


class Session:
    def __init__(self, sid, scene):
        self.id = sid
        self.scene = scene
        self.boxes = []
        self.frames = []       # per-step policy inputs for heatmap queries
        self.last_outcome = None
        self.lock = threading.Lock()


def _rect_to_region(rect):
    x0, y0, x1, y1 = rect
    return (x0 * WORKSPACE_X / 96, y0 * WORKSPACE_Y / 96,
            x1 * WORKSPACE_X / 96, y1 * WORKSPACE_Y / 96)


def _resolve_pick(scene, pick_box):
    """Object whose projected rect best overlaps the drawn pick box."""
    bx0, by0, bx1, by1 = pick_box.rect
    best, best_area = None, 0.0
    for obj in scene.objects:
        ox0, oy0, ox1, oy1 = box_from_object(scene, obj.id).rect
        w = min(bx1, ox1) - max(bx0, ox0)
        h = min(by1, oy1) - max(by0, oy0)
        if w > 0 and h > 0 and w * h > best_area:
            best, best_area = obj, w * h
    if best is None:
        raise HTTPException(422, detail="pick box overlaps no object")
    if best.category == "flexible-bowl":
        raise HTTPException(422, detail="pick box resolves to a flexible-bowl, which is excluded")
    return best


def create_app(model, stats, policy_id="default", max_sessions=8):
    app = FastAPI(title="actvp service")
    sessions: dict[str, Session] = {}
    create_lock = threading.Lock()

    def get_session(sid):
        s = sessions.get(sid)
        if s is None:
            raise HTTPException(404, detail=f"unknown session {sid}")
        return s

    @app.get("/policies")
    def policies():
        return [{"id": policy_id, "config": model.config.to_json()}]

    @app.post("/scene")
    def scene_endpoint(req: SceneRequest):
        if req.scenario not in (1, 2, 3):
            raise HTTPException(422, detail="scenario must be 1, 2 or 3")
        with create_lock:
            if len(sessions) >= max_sessions:
                raise HTTPException(409, detail=f"session limit {max_sessions} reached")
            scene = make_scene(req.scenario, req.seed)
            sid = uuid.uuid4().hex[:12]
            sessions[sid] = Session(sid, scene)
        return {
            "session_id": sid,
            "front_png_b64": png_b64(render(scene, "front")),
            "objects": [
                {"id": o.id, "category": o.category,
                 "pixel_rect": list(box_from_object(scene, o.id).rect)}
                for o in scene.objects
            ],
            "scene": scene_to_json(scene),
        }

    @app.post("/session/{sid}/annotate")
    def annotate(sid: str, req: AnnotateRequest):
        s = get_session(sid)
        if not s.lock.acquire(blocking=False):
            raise HTTPException(409, detail="session busy with a live rollout")
        try:
            boxes = []
            for i, doc in enumerate(req.boxes):
                try:
                    box = PromptBox.from_json(doc)
                    box.validate()
                except (KeyError, ValueError, TypeError) as e:
                    raise HTTPException(422, detail=f"boxes[{i}].rect: {e}")
                boxes.append(box)
            roles = [b.role for b in boxes]
            if roles.count("pick") > 1 or roles.count("place") > 1:
                raise HTTPException(422, detail="boxes: at most one pick and one place box")
            prompted = overlay(render(s.scene, "front"), boxes)
            s.boxes = boxes
            return {"prompted_png_b64": png_b64(prompted)}
        finally:
            s.lock.release()

    @app.post("/session/{sid}/rollout")
    def rollout_endpoint(sid: str, req: RolloutRequest):
        s = get_session(sid)
        if req.mode not in ("ensemble", "replan"):
            raise HTTPException(422, detail=f"mode: unknown mode {req.mode!r}")
        picks = [b for b in s.boxes if b.role == "pick"]
        if not picks:
            raise HTTPException(400, detail="annotate a pick box before rolling out")
        if not s.lock.acquire(blocking=False):
            raise HTTPException(409, detail="session busy with a live rollout")

        target = _resolve_pick(s.scene, picks[0])
        places = [b for b in s.boxes if b.role == "place"]
        region = _rect_to_region(places[0].rect) if places else s.scene.region
        task = Task(pick_id=target.id, region=region, boxes=list(s.boxes))
        rng = np.random.default_rng([s.scene.rng_seed, 909])

        def stream():
            final = s.scene
            try:
                s.frames = []
                for rec in rollout_steps(s.scene, task, model, stats, req.mode,
                                         rng, horizon=req.horizon):
                    final = rec["scene"]
                    s.frames.append({
                        "front": rec["front"],
                        "hand": rec["hand"],
                        "proprio": rec["proprio"],
                    })
                    g = final.gripper
                    line = {
                        "t": rec["t"],
                        "front_png_b64": png_b64(rec["front"]),
                        "gripper": {"position": list(g.position),
                                    "aperture": g.aperture,
                                    "holding": g.holding},
                        "events": [{"kind": k, "payload": p} for k, p in rec["events"]],
                    }
                    yield json.dumps(line) + "\n"
                outcome = judge(final, task.pick_id, task.region)
                s.last_outcome = outcome
                yield json.dumps({"outcome": "success" if outcome.success else "failure",
                                  "failure_tag": outcome.failure_tag}) + "\n"
            finally:
                s.lock.release()

        return StreamingResponse(stream(), media_type="application/x-ndjson")

    @app.get("/session/{sid}/heatmap")
    def heatmap_endpoint(sid: str, layer: int = Query(0), t: int = Query(0),
                         head: str = Query("mean")):
        s = get_session(sid)
        if not s.frames:
            raise HTTPException(400, detail="no completed rollout to inspect")
        if not 0 <= t < len(s.frames):
            raise HTTPException(422, detail=f"t: step {t} outside recorded rollout")
        if not 0 <= layer < model.config.encoder_layers:
            raise HTTPException(422, detail=f"layer: {layer} out of range")
        frame = s.frames[t]
        hm = heatmap(model, frame["front"], frame["hand"], np.array(frame["proprio"]),
                     stats, layer=layer, head=head)
        buf = io.BytesIO()
        Image.fromarray((hm * 255).astype(np.uint8), mode="L").save(buf, format="PNG")
        return Response(content=buf.getvalue(), media_type="image/png")

    return app


def serve(checkpoint, port=8080, max_sessions=8):
    import uvicorn

    model, stats, _, _ = ActModel.load(checkpoint)
    if stats is None:
        raise ValueError(f"{checkpoint} carries no normalization stats")
    app = create_app(model, stats, max_sessions=max_sessions)
    uvicorn.run(app, host="0.0.0.0", port=port)
