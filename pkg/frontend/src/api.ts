import type {
  AnswerResponse,
  CreateSessionRequest,
  PendingQuery,
  SessionState,
  StepResponse,
  TraceRecord,
} from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(public status: number, detail: string) {
    super(`HTTP ${status}: ${detail}`);
  }
}

async function asJson<T>(resp: Response): Promise<T> {
  if (!resp.ok) {
    let detail = resp.statusText;
    try {
      const body = await resp.json();
      if (body && typeof body.detail === "string") detail = body.detail;
    } catch {
      // non-JSON error body; keep the status text
    }
    throw new ApiError(resp.status, detail);
  }
  return (await resp.json()) as T;
}

/**
 * Thin client over the session service. The one piece of real logic is
 * answer deduplication: repeated submissions of the same query_id reuse
 * the in-flight (or settled) request, so a double click or S-key repeat
 * can never send two answers for one query.
 */
export class SessionApi {
  private answers = new Map<string, Promise<AnswerResponse>>();

  constructor(
    private baseUrl: string = "",
    private fetchFn: FetchLike = (url, init) => fetch(url, init),
  ) {}

  createSession(req: CreateSessionRequest): Promise<{ session_id: string }> {
    return this.post("/sessions", req);
  }

  step(sessionId: string): Promise<StepResponse> {
    return this.post(`/sessions/${sessionId}/step`);
  }

  getPending(sessionId: string): Promise<{ pending: PendingQuery | null }> {
    return this.get(`/sessions/${sessionId}/pending`);
  }

  answer(
    sessionId: string,
    queryId: string,
    sameObject: boolean,
  ): Promise<AnswerResponse> {
    const existing = this.answers.get(queryId);
    if (existing) return existing;
    const request = this.post<AnswerResponse>(
      `/sessions/${sessionId}/answer`,
      { query_id: queryId, same_object: sameObject },
    ).catch((err) => {
      // a failed answer may be retried with a fresh request
      this.answers.delete(queryId);
      throw err;
    });
    this.answers.set(queryId, request);
    return request;
  }

  getState(sessionId: string): Promise<SessionState> {
    return this.get(`/sessions/${sessionId}/state`);
  }

  getTrace(sessionId: string): Promise<{ trace: TraceRecord[] }> {
    return this.get(`/sessions/${sessionId}/trace`);
  }

  private get<T>(path: string): Promise<T> {
    return this.fetchFn(this.baseUrl + path).then((r) => asJson<T>(r));
  }

  private post<T>(path: string, body?: unknown): Promise<T> {
    return this.fetchFn(this.baseUrl + path, {
      method: "POST",
      headers: body === undefined ? {} : { "Content-Type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    }).then((r) => asJson<T>(r));
  }
}
