// Session client: HTTP lifecycle plus a WebSocket step channel with
// back-pressure (at most one in-flight step; extra ticks are dropped).

import {
  CreateSessionResponse,
  FinalizeResponse,
  MarkResponse,
  RejectionDetail,
  StepRequest,
  StepResponse,
} from "./protocol.js";

export interface WebSocketLike {
  send(data: string): void;
  close(): void;
  onmessage: ((event: { data: unknown }) => void) | null;
  onopen: ((event: unknown) => void) | null;
  onclose: ((event: unknown) => void) | null;
  onerror: ((event: unknown) => void) | null;
}

export interface Transport {
  fetch(url: string, init?: { method?: string; body?: string; headers?: Record<string, string> }): Promise<{
    ok: boolean;
    status: number;
    json(): Promise<unknown>;
  }>;
  openSocket(url: string): WebSocketLike;
}

export class ServiceError extends Error {
  constructor(
    message: string,
    readonly status: number,
    readonly detail: RejectionDetail | string | null,
  ) {
    super(message);
  }
}

async function requireOk(response: { ok: boolean; status: number; json(): Promise<unknown> }, what: string) {
  if (response.ok) return response.json();
  let detail: RejectionDetail | string | null = null;
  try {
    const body = (await response.json()) as { detail?: RejectionDetail | string };
    detail = body.detail ?? null;
  } catch {
    detail = null;
  }
  const summary = typeof detail === "string" ? detail : detail?.error ?? "request failed";
  throw new ServiceError(`${what}: ${summary}`, response.status, detail);
}

export class SessionClient {
  private socket: WebSocketLike | null = null;
  private pending: ((reply: StepResponse) => void) | null = null;

  constructor(
    private readonly baseUrl: string,
    private readonly transport: Transport,
  ) {}

  sessionId: string | null = null;

  async create(): Promise<CreateSessionResponse> {
    const reply = (await requireOk(
      await this.transport.fetch(`${this.baseUrl}/sessions`, { method: "POST" }),
      "create session",
    )) as CreateSessionResponse;
    this.sessionId = reply.session;
    return reply;
  }

  async openStepChannel(): Promise<void> {
    if (!this.sessionId) throw new Error("create() first");
    const wsBase = this.baseUrl.replace(/^http/, "ws");
    const socket = this.transport.openSocket(`${wsBase}/sessions/${this.sessionId}/ws`);
    this.socket = socket;
    socket.onmessage = (event) => {
      const reply = JSON.parse(String(event.data)) as StepResponse;
      const resolve = this.pending;
      this.pending = null;
      resolve?.(reply);
    };
    await new Promise<void>((resolve, reject) => {
      socket.onopen = () => resolve();
      socket.onerror = (event) => reject(new Error(`websocket error: ${String(event)}`));
    });
  }

  get stepInFlight(): boolean {
    return this.pending !== null;
  }

  // Resolves with the server's echo; returns null if a step is already in
  // flight (the caller's tick is simply dropped).
  step(action: [number, number]): Promise<StepResponse> | null {
    if (!this.socket || !this.sessionId) throw new Error("step channel not open");
    if (this.pending) return null;
    const request: StepRequest = { session: this.sessionId, action };
    const promise = new Promise<StepResponse>((resolve) => {
      this.pending = resolve;
    });
    this.socket.send(JSON.stringify(request));
    return promise;
  }

  async mark(): Promise<MarkResponse> {
    return (await requireOk(
      await this.transport.fetch(`${this.baseUrl}/sessions/${this.sessionId}/mark`, { method: "POST" }),
      "mark changepoint",
    )) as MarkResponse;
  }

  async finalize(): Promise<FinalizeResponse> {
    const reply = (await requireOk(
      await this.transport.fetch(`${this.baseUrl}/sessions/${this.sessionId}/finalize`, {
        method: "POST",
      }),
      "finalize episode",
    )) as FinalizeResponse;
    this.close();
    return reply;
  }

  close(): void {
    this.socket?.close();
    this.socket = null;
    this.pending = null;
  }
}

export function browserTransport(): Transport {
  return {
    fetch: (url, init) => fetch(url, init),
    openSocket: (url) => new WebSocket(url) as unknown as WebSocketLike,
  };
}
