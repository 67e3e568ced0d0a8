// Console wiring: draw pick/place boxes on a live scene, run the policy,
// watch the streamed rollout, and inspect attention heatmaps per layer.
import { annotate, createScene, heatmapUrl, streamRollout, type RolloutHandlers } from "./api.js";
import { drawBoxPreview, drawDragOutline, drawFramePng, drawHeatmapOverlay } from "./draw.js";
import { dragToRect, type Rect } from "./geometry.js";
import { Playback } from "./playback.js";
import { IMAGE_RES, type PromptBox, type StreamStep } from "./schema.js";

const BASE = "";

type Role = "pick" | "place";

interface UiState {
  sessionId: string | null;
  sceneB64: string | null;
  boxes: Partial<Record<Role, PromptBox>>;
  annotated: { pick: boolean; place: boolean };
  role: Role;
  rolling: boolean;
  lastOutcome: string | null;
  heatmapOn: boolean;
  heatmapLayer: number;
  tally: Record<string, { ok: number; total: number }>;
}

const state: UiState = {
  sessionId: null,
  sceneB64: null,
  boxes: {},
  annotated: { pick: false, place: false },
  role: "pick",
  rolling: false,
  lastOutcome: null,
  heatmapOn: false,
  heatmapLayer: 0,
  tally: {},
};

const $ = <T extends HTMLElement>(id: string): T => {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing #${id}`);
  return el as T;
};

const canvas = $<HTMLCanvasElement>("scene");
const ctx = canvas.getContext("2d")!;
const status = $<HTMLElement>("status");
const outcomeBanner = $<HTMLElement>("outcome");

function setStatus(text: string): void {
  status.textContent = text;
}

async function redraw(frameB64?: string): Promise<void> {
  const png = frameB64 ?? state.sceneB64;
  if (!png) return;
  await drawFramePng(ctx, png);
  if (!frameB64) {
    for (const role of ["pick", "place"] as Role[]) {
      const box = state.boxes[role];
      if (box) drawBoxPreview(ctx, box.rect as Rect, role);
    }
  }
}

async function newScene(): Promise<void> {
  const scenario = Number($<HTMLSelectElement>("scenario").value) as 1 | 2 | 3;
  const seed = Number($<HTMLInputElement>("seed").value) || 0;
  setStatus("creating scene...");
  try {
    const doc = await createScene(BASE, { scenario, seed });
    state.sessionId = doc.session_id;
    state.sceneB64 = doc.front_png_b64;
    state.boxes = {};
    state.annotated = { pick: false, place: false };
    state.lastOutcome = null;
    outcomeBanner.textContent = "";
    outcomeBanner.className = "";
    await redraw();
    setStatus(`session ${doc.session_id}: ${doc.objects.length} objects`);
  } catch (e) {
    setStatus(`scene failed: ${(e as Error).message}`);
  }
}

// drag-to-draw in scene pixel space
let dragStart: [number, number] | null = null;

function canvasToScene(ev: MouseEvent): [number, number] {
  const r = canvas.getBoundingClientRect();
  const x = ((ev.clientX - r.left) / r.width) * IMAGE_RES;
  const y = ((ev.clientY - r.top) / r.height) * IMAGE_RES;
  return [x, y];
}

canvas.addEventListener("mousedown", (ev) => {
  if (!state.sceneB64 || state.rolling) return;
  dragStart = canvasToScene(ev);
});

canvas.addEventListener("mousemove", async (ev) => {
  if (!dragStart) return;
  const [x, y] = canvasToScene(ev);
  const rect = dragToRect(dragStart[0], dragStart[1], x, y);
  await redraw();
  if (rect) drawDragOutline(ctx, rect, state.role);
});

canvas.addEventListener("mouseup", async (ev) => {
  if (!dragStart) return;
  const [x, y] = canvasToScene(ev);
  const rect = dragToRect(dragStart[0], dragStart[1], x, y);
  dragStart = null;
  if (!rect) {
    setStatus("degenerate box discarded: drag a larger rectangle");
    await redraw();
    return;
  }
  state.boxes[state.role] = { role: state.role, rect };
  await pushAnnotation();
});

async function pushAnnotation(): Promise<void> {
  if (!state.sessionId) return;
  const boxes = Object.values(state.boxes).filter((b): b is PromptBox => !!b);
  try {
    const prompted = await annotate(BASE, state.sessionId, boxes);
    state.sceneB64 = prompted;
    for (const b of boxes) state.annotated[b.role] = true;
    state.boxes = {};
    await redraw();
    setStatus(`annotated with ${boxes.length} box(es)`);
  } catch (e) {
    setStatus(`annotate failed: ${(e as Error).message}`);
  }
}

function bumpTally(category: string, ok: boolean): void {
  const row = (state.tally[category] ??= { ok: 0, total: 0 });
  row.total += 1;
  if (ok) row.ok += 1;
  const el = $<HTMLElement>("tally");
  el.textContent = Object.entries(state.tally)
    .map(([k, v]) => `${k}: ${v.ok}/${v.total}`)
    .join("   ");
}

async function run(): Promise<void> {
  if (!state.sessionId) {
    setStatus("create a scene first");
    return;
  }
  if (state.rolling) return;
  // client-side preconditions: no request leaves without the required boxes
  const scenario = Number($<HTMLSelectElement>("scenario").value);
  if (!state.annotated.pick) {
    setStatus("blocked: draw a pick box before running");
    return;
  }
  if (scenario === 3 && !state.annotated.place) {
    setStatus("blocked: scenario 3 needs a place box too");
    return;
  }
  if (!state.sceneB64) return;
  state.rolling = true;
  outcomeBanner.textContent = "";
  outcomeBanner.className = "";
  const playback = new Playback<StreamStep>(
    { render: (f) => void redraw(f.front_png_b64) },
    10,
  );
  playback.play();
  const mode = $<HTMLSelectElement>("mode").value as "ensemble" | "replan";
  const handlers: RolloutHandlers = {
    onStep: (step) => playback.push(step),
    onDone: (terminal) => {
      const ok = terminal.outcome === "success";
      outcomeBanner.textContent = ok
        ? "SUCCESS"
        : `FAILURE: ${terminal.failure_tag ?? "unknown"}`;
      outcomeBanner.className = ok ? "ok" : "bad";
      bumpTally(`scenario ${scenario}`, ok);
      state.rolling = false;
      setStatus("rollout complete");
    },
    onError: (err) => {
      playback.pause();
      state.rolling = false;
      setStatus(`stream interrupted: ${err.message} (retry available)`);
      $<HTMLButtonElement>("run").textContent = "retry rollout";
    },
  };
  setStatus(`rolling out (${mode})...`);
  await streamRollout(BASE, state.sessionId, { mode, horizon: 150 }, handlers);
  // drain whatever is still queued
  while (playback.tick()) {
    await new Promise((r) => setTimeout(r, 1000 / playback.fps));
  }
  playback.pause();
}

async function toggleHeatmap(): Promise<void> {
  if (!state.sessionId) return;
  state.heatmapOn = $<HTMLInputElement>("hm-toggle").checked;
  state.heatmapLayer = Number($<HTMLInputElement>("hm-layer").value);
  $<HTMLElement>("hm-layer-label").textContent = String(state.heatmapLayer);
  await redraw();
  if (state.heatmapOn) {
    const t = Number($<HTMLInputElement>("hm-t").value) || 0;
    try {
      await drawHeatmapOverlay(ctx, heatmapUrl(BASE, state.sessionId, state.heatmapLayer, t));
      setStatus(`heatmap: layer ${state.heatmapLayer}, t=${t}`);
    } catch (e) {
      setStatus(`heatmap unavailable: ${(e as Error).message}`);
    }
  }
}

function init(): void {
  $<HTMLButtonElement>("new-scene").addEventListener("click", () => void newScene());
  $<HTMLButtonElement>("run").addEventListener("click", () => void run());
  for (const id of ["hm-toggle", "hm-layer", "hm-t"]) {
    $(id).addEventListener("change", () => void toggleHeatmap());
    $(id).addEventListener("input", () => void toggleHeatmap());
  }
  for (const role of ["pick", "place"] as Role[]) {
    $(`role-${role}`).addEventListener("click", () => {
      state.role = role;
      $("role-pick").classList.toggle("active", role === "pick");
      $("role-place").classList.toggle("active", role === "place");
    });
  }
  setStatus("ready: create a scene");
}

if (document.readyState === "loading") {
  document.addEventListener("DOMContentLoaded", init);
} else {
  init();
}
