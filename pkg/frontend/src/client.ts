import type { Decision, ReviewItem, ReviewStatus, Stats, TraceHit } from './types.js';

/** Error carrying the service's structured error body. */
export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly code: string,
    message: string,
  ) {
    super(message);
    this.name = 'ApiError';
  }
}

async function asApiError(rsp: Response): Promise<ApiError> {
  try {
    const body = (await rsp.json()) as { code?: string; message?: string };
    return new ApiError(rsp.status, body.code ?? 'unknown', body.message ?? rsp.statusText);
  } catch {
    return new ApiError(rsp.status, 'unknown', rsp.statusText);
  }
}

/** Thin client over the /v1 HTTP interface; holds no state of record. */
export class ReviewApiClient {
  constructor(private readonly baseUrl: string) {}

  private async getJson<T>(path: string): Promise<T> {
    const rsp = await fetch(this.baseUrl + path);
    if (!rsp.ok) throw await asApiError(rsp);
    return (await rsp.json()) as T;
  }

  fetchQueue(status: ReviewStatus = 'pending'): Promise<ReviewItem[]> {
    return this.getJson(`/v1/review/queue?status=${status}`);
  }

  async submitDecision(itemId: string, decision: Decision): Promise<ReviewItem> {
    const rsp = await fetch(`${this.baseUrl}/v1/review/${encodeURIComponent(itemId)}`, {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify(decision),
    });
    if (!rsp.ok) throw await asApiError(rsp);
    return (await rsp.json()) as ReviewItem;
  }

  searchTraces(query: string, k: number): Promise<TraceHit[]> {
    return this.getJson(`/v1/traces/search?q=${encodeURIComponent(query)}&k=${k}`);
  }

  getStats(): Promise<Stats> {
    return this.getJson('/v1/stats');
  }
}
