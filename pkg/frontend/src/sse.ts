/** Server-sent-event subscriber over fetch, with exponential-backoff
 * reconnection. Implemented on ReadableStream rather than EventSource so the
 * same code runs in the browser and under Node's test runner, and so the
 * reconnect policy is ours to test. */

export interface SseHandlers {
  onEvent(type: string, data: string): void;
  /** Called with true on (re)connect and false when the stream drops. */
  onStatus?(connected: boolean): void;
  /** Called once per successful (re)connection, after onStatus(true). */
  onReconnect?(): void;
}

export interface SseOptions {
  baseDelayMs?: number;
  maxDelayMs?: number;
  fetchImpl?: typeof fetch;
}

export class SseClient {
  private readonly url: string;
  private readonly handlers: SseHandlers;
  private readonly baseDelayMs: number;
  private readonly maxDelayMs: number;
  private readonly fetchImpl: typeof fetch;
  private attempt = 0;
  private connections = 0;
  private stopped = true;
  private abort: AbortController | null = null;
  private timer: ReturnType<typeof setTimeout> | null = null;

  constructor(url: string, handlers: SseHandlers, options: SseOptions = {}) {
    this.url = url;
    this.handlers = handlers;
    this.baseDelayMs = options.baseDelayMs ?? 500;
    this.maxDelayMs = options.maxDelayMs ?? 15_000;
    this.fetchImpl = options.fetchImpl ?? fetch;
  }

  start(): void {
    if (!this.stopped) return;
    this.stopped = false;
    void this.connect();
  }

  stop(): void {
    this.stopped = true;
    if (this.timer !== null) clearTimeout(this.timer);
    this.abort?.abort();
  }

  get reconnectCount(): number {
    return Math.max(0, this.connections - 1);
  }

  private scheduleReconnect(): void {
    if (this.stopped) return;
    const delay = Math.min(this.baseDelayMs * 2 ** this.attempt, this.maxDelayMs);
    this.attempt += 1;
    this.timer = setTimeout(() => void this.connect(), delay);
  }

  private async connect(): Promise<void> {
    if (this.stopped) return;
    this.abort = new AbortController();
    try {
      const resp = await this.fetchImpl(this.url, {
        headers: { Accept: "text/event-stream" },
        signal: this.abort.signal,
      });
      if (!resp.ok || !resp.body) throw new Error(`stream rejected: ${resp.status}`);
      this.attempt = 0;
      this.connections += 1;
      this.handlers.onStatus?.(true);
      if (this.connections > 1) this.handlers.onReconnect?.();
      await this.pump(resp.body);
    } catch {
      // fall through to reconnect
    }
    if (!this.stopped) {
      this.handlers.onStatus?.(false);
      this.scheduleReconnect();
    }
  }

  private async pump(body: ReadableStream<Uint8Array>): Promise<void> {
    const reader = body.getReader();
    const decoder = new TextDecoder();
    let buffer = "";
    for (;;) {
      const { done, value } = await reader.read();
      if (done) break;
      buffer += decoder.decode(value, { stream: true });
      let sep: number;
      while ((sep = buffer.indexOf("\n\n")) >= 0) {
        this.dispatch(buffer.slice(0, sep));
        buffer = buffer.slice(sep + 2);
      }
    }
  }

  private dispatch(frame: string): void {
    let type = "message";
    const data: string[] = [];
    for (const line of frame.split("\n")) {
      if (line.startsWith(":")) continue; // comment / keep-alive
      if (line.startsWith("event:")) type = line.slice(6).trim();
      else if (line.startsWith("data:")) data.push(line.slice(5).trim());
    }
    if (data.length > 0) this.handlers.onEvent(type, data.join("\n"));
  }
}
