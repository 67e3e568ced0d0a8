import { describe, expect, it } from "vitest";
import {
  AnnotateRequestSchema,
  PromptBoxSchema,
  RolloutRequestSchema,
  SceneRequestSchema,
  StreamStepSchema,
  StreamTerminalSchema,
} from "../src/schema.js";

describe("outbound payloads", () => {
  it("accepts well-formed requests", () => {
    expect(SceneRequestSchema.parse({ scenario: 2, seed: 7 })).toBeTruthy();
    expect(
      AnnotateRequestSchema.parse({
        boxes: [{ role: "pick", rect: [4, 4, 10, 10] }],
      }),
    ).toBeTruthy();
    expect(RolloutRequestSchema.parse({ mode: "ensemble", horizon: 150 })).toBeTruthy();
  });

  it("rejects degenerate or out-of-bounds boxes", () => {
    expect(() => PromptBoxSchema.parse({ role: "pick", rect: [10, 10, 10, 20] })).toThrow();
    expect(() => PromptBoxSchema.parse({ role: "pick", rect: [0, 0, 97, 10] })).toThrow();
    expect(() => PromptBoxSchema.parse({ role: "pick", rect: [-1, 0, 5, 10] })).toThrow();
    expect(() => PromptBoxSchema.parse({ role: "grab", rect: [0, 0, 5, 10] })).toThrow();
    expect(() => PromptBoxSchema.parse({ role: "pick", rect: [0.5, 0, 5, 10] })).toThrow();
  });

  it("rejects bad scene and rollout requests", () => {
    expect(() => SceneRequestSchema.parse({ scenario: 4, seed: 0 })).toThrow();
    expect(() => SceneRequestSchema.parse({ scenario: 1, seed: -3 })).toThrow();
    expect(() => RolloutRequestSchema.parse({ mode: "yolo", horizon: 10 })).toThrow();
    expect(() => AnnotateRequestSchema.parse({
      boxes: [
        { role: "pick", rect: [0, 0, 5, 5] },
        { role: "pick", rect: [6, 6, 9, 9] },
        { role: "place", rect: [12, 12, 20, 20] },
      ],
    })).toThrow();
  });

  it("parses stream lines", () => {
    const step = StreamStepSchema.parse({
      t: 0,
      front_png_b64: "abc",
      gripper: { position: [0.5, 0.3, 0.25], aperture: 0.14, holding: null },
      events: [{ kind: "grasp-attempt", payload: { object: 3 } }],
    });
    expect(step.t).toBe(0);
    const done = StreamTerminalSchema.parse({ outcome: "failure", failure_tag: "weak-grasp" });
    expect(done.outcome).toBe("failure");
  });
});
