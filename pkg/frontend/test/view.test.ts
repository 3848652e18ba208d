import { describe, expect, it } from "vitest";

import { EnvConfig } from "../src/protocol.js";
import { applyStep, handleGeometry, initialView, statusLine } from "../src/view.js";

const CONFIG: EnvConfig = {
  elements: [
    { axis_start: [0.2, 1 / 3], axis_end: [0.8, 1 / 3], grab_radius: 0.08 },
    { axis_start: [0.2, 2 / 3], axis_end: [0.8, 2 / 3], grab_radius: 0.08 },
  ],
  eps: 0.1,
  horizon: 100,
  a_max: 0.05,
};

describe("applyStep", () => {
  it("records every echoed state in order", () => {
    let view = initialView();
    view = applyStep(view, { state: [0.5, 0.45, 0, 0], goal_id: 0, t: 1 });
    view = applyStep(view, { state: [0.5, 0.4, 0, 0], goal_id: 0, t: 2 });
    expect(view.recordedStates).toEqual([
      [0.5, 0.45, 0, 0],
      [0.5, 0.4, 0, 0],
    ]);
    expect(view.tick).toBe(2);
  });

  it("keeps state untouched on an error reply", () => {
    let view = initialView();
    view = applyStep(view, { state: [0.5, 0.45, 0, 0], goal_id: 0, t: 1 });
    view = applyStep(view, { state: [], goal_id: null, t: 0, error: "bad action" });
    expect(view.state).toEqual([0.5, 0.45, 0, 0]);
    expect(view.lastMessage).toBe("bad action");
    expect(view.recordedStates).toHaveLength(1);
  });

  it("surfaces server-side clamping", () => {
    const view = applyStep(initialView(), {
      state: [0.55, 0.5, 0, 0],
      goal_id: null,
      t: 1,
      clamped: true,
    });
    expect(view.lastMessage).toContain("clamped");
  });
});

describe("handleGeometry", () => {
  it("recomputes handle positions from the server state only", () => {
    const handles = handleGeometry(CONFIG, [0.9, 0.9, 0.5, 1.0]);
    expect(handles[0].x).toBeCloseTo(0.5, 12);
    expect(handles[0].y).toBeCloseTo(1 / 3, 12);
    expect(handles[0].open).toBe(false);
    expect(handles[0].closed).toBe(false);
    expect(handles[1].x).toBeCloseTo(0.8, 12);
    expect(handles[1].open).toBe(true);
  });
});

describe("statusLine", () => {
  it("shows the discretized goal exactly as the server reported it", () => {
    let view = initialView();
    view.status = "live";
    view = applyStep(view, { state: [0.5, 0.5, 0, 1], goal_id: 2, t: 7 });
    expect(statusLine(view, 2)).toContain("at goal 2");
    view = applyStep(view, { state: [0.5, 0.5, 0.5, 1], goal_id: null, t: 8 });
    expect(statusLine(view, 2)).toContain("between goals");
  });
});
