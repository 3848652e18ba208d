// Wire schema of the teleop service. The server owns all physics; the client
// only ever sends actions, marks, and finalize requests.

export interface ElementConfig {
  axis_start: [number, number];
  axis_end: [number, number];
  grab_radius: number;
}

export interface EnvConfig {
  elements: ElementConfig[];
  eps: number;
  horizon: number;
  a_max: number;
}

export interface CreateSessionResponse {
  session: string;
  config: EnvConfig;
  num_elements: number;
  state: number[];
  goal_id: number | null;
  t: number;
}

export interface StepRequest {
  session: string;
  action: [number, number];
}

export interface StepResponse {
  state: number[];
  goal_id: number | null;
  t: number;
  clamped?: boolean;
  error?: string;
}

export interface MarkResponse {
  goal_id: number;
  changepoints: number;
}

export interface FinalizeResponse {
  episode: number;
  changepoints: number;
}

export interface ElementDistance {
  element: number;
  joint: number;
  to_closed: number;
  to_open: number;
  in_band: boolean;
}

export interface RejectionDetail {
  error: string;
  distances?: ElementDistance[];
}

export function goalBits(goalId: number, numElements: number): number[] {
  const bits: number[] = [];
  for (let e = 0; e < numElements; e++) bits.push((goalId >> e) & 1);
  return bits;
}

export function goalLabel(goalId: number, numElements: number): string {
  return goalBits(goalId, numElements)
    .map((b) => (b ? "open" : "closed"))
    .join(" / ");
}
