// Thin client for the evaluation service JSON API.

export interface RubricEntry {
  score: number;
  description: string;
}

export interface SessionInfo {
  session_id: string;
  token: string;
  annotator_id: string;
  total: number;
  cursor: number;
  resumed: boolean;
}

export interface ItemView {
  index: number;
  total: number;
  label: string;
  clip_url: string;
  reference_url?: string;
  previous_score?: number | null;
  rubric: RubricEntry[];
}

export type NextItem = ({ status: "item" } & ItemView) | { status: "done"; total: number };

export interface Ack {
  index: number;
  revision: number;
  cursor: number;
  total: number;
  done: boolean;
}

/** Server rejected the request; retrying the same call will not help. */
export class ApiError extends Error {
  constructor(public status: number, public code: string, message: string) {
    super(message);
  }
}

/** Request never got an answer; safe to retry. */
export class NetworkError extends Error {}

async function call<T>(path: string, init: RequestInit = {}): Promise<T> {
  let res: Response;
  try {
    res = await fetch(path, init);
  } catch (e) {
    throw new NetworkError(String(e));
  }
  if (res.status >= 500) {
    throw new NetworkError(`server answered ${res.status}`);
  }
  const body = await res.json().catch(() => ({}));
  if (!res.ok) {
    throw new ApiError(res.status, body.code ?? "unknown", body.message ?? res.statusText);
  }
  return body as T;
}

export class Api {
  constructor(private session?: SessionInfo) {}

  private auth(): HeadersInit {
    return { Authorization: `Bearer ${this.session?.token ?? ""}` };
  }

  private get sid(): string {
    return encodeURIComponent(this.session?.session_id ?? "");
  }

  rubric(): Promise<RubricEntry[]> {
    return call("/api/rubric");
  }

  async start(annotatorId: string): Promise<SessionInfo> {
    this.session = await call<SessionInfo>("/api/sessions", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ annotator_id: annotatorId }),
    });
    return this.session;
  }

  next(): Promise<NextItem> {
    return call(`/api/sessions/${this.sid}/next`, { headers: this.auth() });
  }

  item(index: number): Promise<ItemView> {
    return call(`/api/sessions/${this.sid}/items/${index}`, { headers: this.auth() });
  }

  submit(index: number, score: number): Promise<Ack> {
    return call(`/api/sessions/${this.sid}/scores`, {
      method: "POST",
      headers: { ...this.auth(), "Content-Type": "application/json" },
      body: JSON.stringify({ index, score }),
    });
  }
}
