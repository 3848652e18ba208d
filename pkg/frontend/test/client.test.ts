import { describe, expect, it } from "vitest";

import { SessionClient, Transport, WebSocketLike } from "../src/client.js";
import { StepRequest } from "../src/protocol.js";

class FakeSocket implements WebSocketLike {
  sent: StepRequest[] = [];
  onmessage: ((event: { data: unknown }) => void) | null = null;
  onopen: ((event: unknown) => void) | null = null;
  onclose: ((event: unknown) => void) | null = null;
  onerror: ((event: unknown) => void) | null = null;
  closed = false;

  send(data: string): void {
    this.sent.push(JSON.parse(data));
  }

  close(): void {
    this.closed = true;
  }

  reply(body: unknown): void {
    this.onmessage?.({ data: JSON.stringify(body) });
  }
}

function fakeTransport() {
  const socket = new FakeSocket();
  const calls: { url: string; method?: string }[] = [];
  const responses: unknown[] = [];
  const transport: Transport = {
    async fetch(url, init) {
      calls.push({ url, method: init?.method });
      const body = responses.shift() ?? {};
      return { ok: true, status: 200, json: async () => body };
    },
    openSocket() {
      queueMicrotask(() => socket.onopen?.({}));
      return socket;
    },
  };
  return { socket, calls, responses, transport };
}

describe("SessionClient", () => {
  it("creates a session then opens the step channel", async () => {
    const { transport, calls, responses } = fakeTransport();
    responses.push({ session: "abc", state: [0.5, 0.5, 0, 0], goal_id: 0, t: 0 });
    const client = new SessionClient("http://host:1", transport);
    const created = await client.create();
    expect(created.session).toBe("abc");
    await client.openStepChannel();
    expect(calls[0]).toEqual({ url: "http://host:1/sessions", method: "POST" });
  });

  it("sends the exact step wire format and resolves with the echo", async () => {
    const { transport, socket, responses } = fakeTransport();
    responses.push({ session: "abc", state: [], goal_id: null, t: 0 });
    const client = new SessionClient("http://host:1", transport);
    await client.create();
    await client.openStepChannel();

    const pending = client.step([0.05, 0]);
    expect(pending).not.toBeNull();
    expect(socket.sent).toEqual([{ session: "abc", action: [0.05, 0] }]);
    socket.reply({ state: [0.55, 0.5, 0, 0], goal_id: null, t: 1 });
    const reply = await pending!;
    expect(reply.t).toBe(1);
  });

  it("drops ticks while a step is in flight", async () => {
    const { transport, socket, responses } = fakeTransport();
    responses.push({ session: "abc", state: [], goal_id: null, t: 0 });
    const client = new SessionClient("http://host:1", transport);
    await client.create();
    await client.openStepChannel();

    const first = client.step([0.01, 0]);
    const second = client.step([0.02, 0]);
    expect(second).toBeNull();
    expect(socket.sent).toHaveLength(1);
    socket.reply({ state: [0.51, 0.5, 0, 0], goal_id: null, t: 1 });
    await first!;
    expect(client.step([0.02, 0])).not.toBeNull();
  });

  it("closes the socket on finalize", async () => {
    const { transport, socket, responses } = fakeTransport();
    responses.push({ session: "abc", state: [], goal_id: null, t: 0 });
    responses.push({ episode: 0, changepoints: 2 });
    const client = new SessionClient("http://host:1", transport);
    await client.create();
    await client.openStepChannel();
    const reply = await client.finalize();
    expect(reply.episode).toBe(0);
    expect(socket.closed).toBe(true);
  });
});
