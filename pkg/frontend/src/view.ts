// Client-side view model. Derived strictly from server responses: handle
// positions are recomputed from the echoed state vector, never simulated.

import { EnvConfig, StepResponse, goalLabel } from "./protocol.js";

export type ConnectionStatus = "connecting" | "live" | "closed" | "error";

export interface HandleGeometry {
  element: number;
  x: number;
  y: number;
  joint: number;
  open: boolean; // joint within eps of 1
  closed: boolean; // joint within eps of 0
}

export interface ViewModel {
  status: ConnectionStatus;
  sessionId: string | null;
  state: number[];
  goalId: number | null;
  tick: number;
  changepoints: number;
  recordedStates: number[][]; // every state echoed by the server, in order
  lastMessage: string;
}

export function initialView(): ViewModel {
  return {
    status: "connecting",
    sessionId: null,
    state: [],
    goalId: null,
    tick: 0,
    changepoints: 0,
    recordedStates: [],
    lastMessage: "",
  };
}

export function applyStep(view: ViewModel, reply: StepResponse): ViewModel {
  if (reply.error) {
    return { ...view, lastMessage: reply.error };
  }
  return {
    ...view,
    state: reply.state,
    goalId: reply.goal_id,
    tick: reply.t,
    recordedStates: [...view.recordedStates, reply.state],
    lastMessage: reply.clamped ? "action clamped by server" : view.lastMessage,
  };
}

export function handleGeometry(config: EnvConfig, state: number[]): HandleGeometry[] {
  const joints = state.slice(2);
  return config.elements.map((element, index) => {
    const joint = joints[index] ?? 0;
    const [sx, sy] = element.axis_start;
    const [ex, ey] = element.axis_end;
    return {
      element: index,
      x: sx + joint * (ex - sx),
      y: sy + joint * (ey - sy),
      joint,
      open: Math.abs(joint - 1) <= config.eps,
      closed: Math.abs(joint) <= config.eps,
    };
  });
}

export function statusLine(view: ViewModel, numElements: number): string {
  if (view.status !== "live") return `connection: ${view.status}`;
  const goal =
    view.goalId === null
      ? "between goals"
      : `at goal ${view.goalId} (${goalLabel(view.goalId, numElements)})`;
  return `t=${view.tick} | ${goal} | marks: ${view.changepoints}`;
}
