import { describe, expect, it } from "vitest";

import { dragToAction, keysToAction, tickAction } from "../src/input.js";

const A_MAX = 0.05;

describe("keysToAction", () => {
  it("maps a held right arrow to full-speed +x", () => {
    expect(keysToAction(new Set(["ArrowRight"]), A_MAX)).toEqual([A_MAX, 0]);
  });

  it("returns zero with no input", () => {
    expect(keysToAction(new Set(), A_MAX)).toEqual([0, 0]);
  });

  it("combines diagonal keys componentwise and clamps", () => {
    const action = keysToAction(new Set(["ArrowRight", "ArrowDown"]), A_MAX);
    expect(action).toEqual([A_MAX, A_MAX]);
  });

  it("cancels opposing keys", () => {
    expect(keysToAction(new Set(["ArrowRight", "ArrowLeft"]), A_MAX)).toEqual([0, 0]);
  });

  it("supports wasd aliases", () => {
    expect(keysToAction(new Set(["KeyA"]), A_MAX)).toEqual([-A_MAX, 0]);
  });

  it("ignores unrelated keys", () => {
    expect(keysToAction(new Set(["KeyQ", "Space"]), A_MAX)).toEqual([0, 0]);
  });
});

describe("dragToAction", () => {
  it("moves toward the pointer, clamped per component", () => {
    const action = dragToAction({ targetX: 0.9, targetY: 0.52, eeX: 0.5, eeY: 0.5 }, A_MAX);
    expect(action[0]).toBeCloseTo(A_MAX, 12);
    expect(action[1]).toBeCloseTo(0.02, 12);
  });

  it("arrives exactly when closer than a_max", () => {
    const action = dragToAction({ targetX: 0.51, targetY: 0.5, eeX: 0.5, eeY: 0.5 }, A_MAX);
    expect(action[0]).toBeCloseTo(0.01, 12);
    expect(action[1]).toBe(0);
  });
});

describe("tickAction", () => {
  it("prefers the pointer drag over keys", () => {
    const action = tickAction(
      new Set(["ArrowLeft"]),
      { targetX: 0.9, targetY: 0.5, eeX: 0.5, eeY: 0.5 },
      A_MAX,
    );
    expect(action[0]).toBeCloseTo(A_MAX, 12);
  });

  it("falls back to keys without a drag", () => {
    expect(tickAction(new Set(["ArrowUp"]), null, A_MAX)).toEqual([0, -A_MAX]);
  });
});
