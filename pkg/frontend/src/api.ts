// Typed client for the actvp service. Every outbound payload is validated
// against the shared schemas before the request is sent.
import {
  AnnotateRequestSchema,
  RolloutRequestSchema,
  SceneRequestSchema,
  SceneResponseSchema,
  StreamStepSchema,
  StreamTerminalSchema,
  type AnnotateRequest,
  type PromptBox,
  type RolloutRequest,
  type SceneRequest,
  type SceneResponse,
  type StreamStep,
  type StreamTerminal,
} from "./schema.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    detail: string,
  ) {
    super(detail);
  }
}

async function post(base: string, path: string, body: unknown): Promise<Response> {
  const r = await fetch(base + path, {
    method: "POST",
    headers: { "content-type": "application/json" },
    body: JSON.stringify(body),
  });
  if (!r.ok) {
    const text = await r.text();
    throw new ApiError(r.status, text);
  }
  return r;
}

export async function createScene(base: string, req: SceneRequest): Promise<SceneResponse> {
  const body = SceneRequestSchema.parse(req);
  const r = await post(base, "/scene", body);
  return SceneResponseSchema.parse(await r.json());
}

export async function annotate(
  base: string,
  sessionId: string,
  boxes: PromptBox[],
): Promise<string> {
  const body: AnnotateRequest = AnnotateRequestSchema.parse({ boxes });
  const r = await post(base, `/session/${sessionId}/annotate`, body);
  const doc = (await r.json()) as { prompted_png_b64: string };
  return doc.prompted_png_b64;
}

export interface RolloutHandlers {
  onStep(step: StreamStep): void;
  onDone(terminal: StreamTerminal): void;
  onError(err: Error): void;
}

export async function streamRollout(
  base: string,
  sessionId: string,
  req: RolloutRequest,
  handlers: RolloutHandlers,
): Promise<void> {
  const body = RolloutRequestSchema.parse(req);
  let response: Response;
  try {
    response = await post(base, `/session/${sessionId}/rollout`, body);
  } catch (e) {
    handlers.onError(e as Error);
    return;
  }
  const reader = response.body!.getReader();
  const decoder = new TextDecoder();
  let buffered = "";
  try {
    for (;;) {
      const { done, value } = await reader.read();
      if (done) break;
      buffered += decoder.decode(value, { stream: true });
      let nl;
      while ((nl = buffered.indexOf("\n")) >= 0) {
        const line = buffered.slice(0, nl).trim();
        buffered = buffered.slice(nl + 1);
        if (!line) continue;
        const doc = JSON.parse(line);
        if ("outcome" in doc) {
          handlers.onDone(StreamTerminalSchema.parse(doc));
        } else {
          handlers.onStep(StreamStepSchema.parse(doc));
        }
      }
    }
  } catch (e) {
    handlers.onError(e as Error);
  }
}

export function heatmapUrl(
  base: string,
  sessionId: string,
  layer: number,
  t: number,
): string {
  return `${base}/session/${sessionId}/heatmap?layer=${layer}&t=${t}`;
}
