// Canvas rendering: scene frame, box previews matching the server overlay,
// and the heatmap layer. Everything works in 96x96 scene-pixel space and the
// canvas is scaled up with crisp pixels.
import { LINE_WIDTH, perimeterBand, type Rect } from "./geometry.js";
import { IMAGE_RES } from "./schema.js";

export const PICK_COLOR = "#00ff00";
export const PLACE_COLOR = "#ff0000";

export function sceneScale(canvas: HTMLCanvasElement): number {
  return canvas.width / IMAGE_RES;
}

export async function drawFramePng(
  ctx: CanvasRenderingContext2D,
  pngB64: string,
): Promise<void> {
  const img = new Image();
  await new Promise<void>((resolve, reject) => {
    img.onload = () => resolve();
    img.onerror = () => reject(new Error("bad frame png"));
    img.src = `data:image/png;base64,${pngB64}`;
  });
  ctx.imageSmoothingEnabled = false;
  ctx.drawImage(img, 0, 0, ctx.canvas.width, ctx.canvas.height);
}

/** Preview a prompt box with the exact server band geometry. */
export function drawBoxPreview(
  ctx: CanvasRenderingContext2D,
  rect: Rect,
  role: "pick" | "place",
): void {
  const s = sceneScale(ctx.canvas);
  ctx.fillStyle = role === "pick" ? PICK_COLOR : PLACE_COLOR;
  for (const flat of perimeterBand(rect)) {
    const y = Math.floor(flat / IMAGE_RES);
    const x = flat % IMAGE_RES;
    ctx.fillRect(x * s, y * s, s, s);
  }
}

/** Rubber-band outline while dragging (thin, non-committal). */
export function drawDragOutline(ctx: CanvasRenderingContext2D, rect: Rect, role: string): void {
  const s = sceneScale(ctx.canvas);
  ctx.strokeStyle = role === "pick" ? PICK_COLOR : PLACE_COLOR;
  ctx.lineWidth = LINE_WIDTH;
  ctx.strokeRect(rect[0] * s, rect[1] * s, (rect[2] - rect[0]) * s, (rect[3] - rect[1]) * s);
}

export async function drawHeatmapOverlay(
  ctx: CanvasRenderingContext2D,
  url: string,
  alpha = 0.55,
): Promise<void> {
  const img = new Image();
  await new Promise<void>((resolve, reject) => {
    img.onload = () => resolve();
    img.onerror = () => reject(new Error("heatmap fetch failed"));
    img.src = url;
  });
  ctx.save();
  ctx.globalAlpha = alpha;
  ctx.imageSmoothingEnabled = false;
  ctx.drawImage(img, 0, 0, ctx.canvas.width, ctx.canvas.height);
  ctx.restore();
}
