// Wire contract with the actvp service. Every outbound payload is validated
// against these schemas before it leaves the client.
import { z } from "zod";

export const IMAGE_RES = 96;

export const PromptRole = z.enum(["pick", "place"]);

export const PromptBoxSchema = z
  .object({
    role: PromptRole,
    rect: z.tuple([
      z.number().int(),
      z.number().int(),
      z.number().int(),
      z.number().int(),
    ]),
  })
  .refine(
    (b) =>
      b.rect[0] >= 0 &&
      b.rect[1] >= 0 &&
      b.rect[0] < b.rect[2] &&
      b.rect[1] < b.rect[3] &&
      b.rect[2] <= IMAGE_RES &&
      b.rect[3] <= IMAGE_RES,
    { message: "rect out of bounds or degenerate" },
  );

export const SceneRequestSchema = z.object({
  scenario: z.union([z.literal(1), z.literal(2), z.literal(3)]),
  seed: z.number().int().nonnegative(),
});

export const AnnotateRequestSchema = z.object({
  boxes: z.array(PromptBoxSchema).max(2),
});

export const RolloutRequestSchema = z.object({
  mode: z.enum(["ensemble", "replan"]),
  horizon: z.number().int().positive().max(600),
});

export const SceneObjectSchema = z.object({
  id: z.number().int(),
  category: z.string(),
  pixel_rect: z.array(z.number().int()).length(4),
});

export const SceneResponseSchema = z.object({
  session_id: z.string(),
  front_png_b64: z.string(),
  objects: z.array(SceneObjectSchema),
});

export const StreamStepSchema = z.object({
  t: z.number().int(),
  front_png_b64: z.string(),
  gripper: z.object({
    position: z.array(z.number()).length(3),
    aperture: z.number(),
    holding: z.number().nullable(),
  }),
  events: z.array(z.object({ kind: z.string(), payload: z.record(z.any()) })),
});

export const StreamTerminalSchema = z.object({
  outcome: z.enum(["success", "failure"]),
  failure_tag: z.string().nullable(),
});

export type PromptBox = z.infer<typeof PromptBoxSchema>;
export type SceneRequest = z.infer<typeof SceneRequestSchema>;
export type AnnotateRequest = z.infer<typeof AnnotateRequestSchema>;
export type RolloutRequest = z.infer<typeof RolloutRequestSchema>;
export type SceneResponse = z.infer<typeof SceneResponseSchema>;
export type StreamStep = z.infer<typeof StreamStepSchema>;
export type StreamTerminal = z.infer<typeof StreamTerminalSchema>;
