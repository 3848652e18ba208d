// Browser entry: top-down canvas of tracks and handles, fixed-tick input
// sampling, and the mark/finalize workflow. Server-authoritative throughout.

import { browserTransport, ServiceError, SessionClient } from "./client.js";
import { tickAction, isZero, PointerDrag } from "./input.js";
import { CreateSessionResponse, goalLabel } from "./protocol.js";
import { applyStep, handleGeometry, initialView, statusLine, ViewModel } from "./view.js";

const TICK_HZ = 20;
const SEND_IDLE_ACTIONS = false; // config toggle: suppress zero-action ticks

const params = new URLSearchParams(location.search);
const SERVER_URL = params.get("server") ?? "http://127.0.0.1:8765";

const canvas = document.getElementById("workspace") as HTMLCanvasElement;
const ctx = canvas.getContext("2d")!;
const banner = document.getElementById("banner")!;
const status = document.getElementById("status")!;
const hint = document.getElementById("hint")!;
const legend = document.getElementById("legend")!;
const markButton = document.getElementById("mark") as HTMLButtonElement;
const finishButton = document.getElementById("finish") as HTMLButtonElement;
const reconnectButton = document.getElementById("reconnect") as HTMLButtonElement;

let view: ViewModel = initialView();
let session: CreateSessionResponse | null = null;
let client: SessionClient | null = null;
const pressed = new Set<string>();
let drag: PointerDrag | null = null;

function workspaceToCanvas(x: number, y: number): [number, number] {
  return [x * canvas.width, y * canvas.height];
}

function canvasToWorkspace(px: number, py: number): [number, number] {
  const rect = canvas.getBoundingClientRect();
  return [(px - rect.left) / rect.width, (py - rect.top) / rect.height];
}

function render() {
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  if (!session || view.state.length === 0) return;
  const config = session.config;

  for (const [index, element] of config.elements.entries()) {
    const [sx, sy] = workspaceToCanvas(...element.axis_start);
    const [ex, ey] = workspaceToCanvas(...element.axis_end);
    ctx.strokeStyle = "#888";
    ctx.lineWidth = 4;
    ctx.beginPath();
    ctx.moveTo(sx, sy);
    ctx.lineTo(ex, ey);
    ctx.stroke();
    ctx.fillStyle = "#555";
    ctx.font = "12px sans-serif";
    ctx.fillText(`element ${index}`, sx, sy - 12);
  }

  for (const handle of handleGeometry(config, view.state)) {
    const [hx, hy] = workspaceToCanvas(handle.x, handle.y);
    ctx.beginPath();
    ctx.arc(hx, hy, 10, 0, Math.PI * 2);
    ctx.fillStyle = handle.open ? "#2e7d32" : handle.closed ? "#90a4ae" : "#f9a825";
    ctx.fill();
    ctx.strokeStyle = "#333";
    ctx.beginPath();
    ctx.arc(hx, hy, config.elements[handle.element].grab_radius * canvas.width, 0, Math.PI * 2);
    ctx.setLineDash([3, 5]);
    ctx.stroke();
    ctx.setLineDash([]);
  }

  const [eeX, eeY] = workspaceToCanvas(view.state[0], view.state[1]);
  ctx.beginPath();
  ctx.arc(eeX, eeY, 7, 0, Math.PI * 2);
  ctx.fillStyle = "#1565c0";
  ctx.fill();

  status.textContent = statusLine(view, session.num_elements);
  hint.textContent = view.lastMessage;
}

function renderLegend() {
  if (!session) return;
  const n = session.num_elements;
  const rows: string[] = [];
  for (let goal = 0; goal < (1 << n); goal++) {
    rows.push(`<li>goal ${goal}: ${goalLabel(goal, n)}</li>`);
  }
  legend.innerHTML = `<b>goal catalog</b><ul>${rows.join("")}</ul>`;
}

async function connect() {
  banner.textContent = "";
  view = initialView();
  client = new SessionClient(SERVER_URL, browserTransport());
  try {
    session = await client.create();
    await client.openStepChannel();
  } catch (error) {
    view.status = "error";
    banner.textContent = `cannot reach service at ${SERVER_URL}: ${String(error)}`;
    return;
  }
  view = {
    ...view,
    status: "live",
    sessionId: session.session,
    state: session.state,
    goalId: session.goal_id,
    recordedStates: [session.state],
  };
  banner.textContent = `session ${session.session}`;
  renderLegend();
  render();
}

async function tick() {
  if (!client || !session || view.status !== "live") return;
  if (drag) {
    drag = { ...drag, eeX: view.state[0], eeY: view.state[1] };
  }
  const action = tickAction(pressed, drag, session.config.a_max);
  if (isZero(action) && !SEND_IDLE_ACTIONS) return;
  const inflight = client.step(action);
  if (!inflight) return; // previous step unanswered: drop this tick
  const reply = await inflight;
  view = applyStep(view, reply);
  render();
}

markButton.addEventListener("click", async () => {
  if (!client) return;
  try {
    const reply = await client.mark();
    view = { ...view, changepoints: reply.changepoints, lastMessage: `marked goal ${reply.goal_id}` };
  } catch (error) {
    if (error instanceof ServiceError && typeof error.detail === "object" && error.detail?.distances) {
      const offending = error.detail.distances.filter((d) => !d.in_band);
      view = {
        ...view,
        lastMessage: offending
          .map((d) => `element ${d.element} at ${d.joint.toFixed(2)}: move to 0 or 1`)
          .join("; "),
      };
    } else {
      view = { ...view, lastMessage: String(error) };
    }
  }
  render();
});

finishButton.addEventListener("click", async () => {
  if (!client) return;
  try {
    const reply = await client.finalize();
    view = {
      ...view,
      status: "closed",
      lastMessage: `episode ${reply.episode} recorded with ${reply.changepoints} marks`,
    };
  } catch (error) {
    view = { ...view, lastMessage: String(error) };
  }
  render();
});

reconnectButton.addEventListener("click", () => void connect());

window.addEventListener("keydown", (event) => {
  pressed.add(event.code);
});
window.addEventListener("keyup", (event) => {
  pressed.delete(event.code);
});
canvas.addEventListener("pointerdown", (event) => {
  const [x, y] = canvasToWorkspace(event.clientX, event.clientY);
  drag = { targetX: x, targetY: y, eeX: view.state[0] ?? 0.5, eeY: view.state[1] ?? 0.5 };
});
canvas.addEventListener("pointermove", (event) => {
  if (!drag) return;
  const [x, y] = canvasToWorkspace(event.clientX, event.clientY);
  drag = { ...drag, targetX: x, targetY: y };
});
window.addEventListener("pointerup", () => {
  drag = null;
});

setInterval(() => void tick(), 1000 / TICK_HZ);
void connect();
