import type { DecisionOut, Digest, QueueItem, ThresholdOut, Verdict } from './types';

export class ApiError extends Error {
  constructor(
    public status: number,
    public code: string,
    message: string,
  ) {
    super(message);
  }
}

export class NetworkError extends Error {}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

async function parseError(resp: Response): Promise<ApiError> {
  let code = 'error';
  let message = resp.statusText;
  try {
    const body = await resp.json();
    if (body && typeof body === 'object') {
      code = body.code ?? code;
      message = body.message ?? message;
    }
  } catch {
    // non-JSON error body: keep the status text
  }
  return new ApiError(resp.status, code, message);
}

/** Thin typed client for the review service; all state lives server-side. */
export class ReviewApi {
  constructor(
    private baseUrl: string,
    private fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    let resp: Response;
    try {
      resp = await this.fetchFn(this.baseUrl + path, {
        ...init,
        headers: { 'Content-Type': 'application/json', ...(init?.headers ?? {}) },
      });
    } catch (err) {
      throw new NetworkError(String(err));
    }
    if (!resp.ok) {
      throw await parseError(resp);
    }
    return (await resp.json()) as T;
  }

  getQueue(limit?: number, offset = 0): Promise<QueueItem[]> {
    const params = new URLSearchParams({ offset: String(offset) });
    if (limit !== undefined) params.set('limit', String(limit));
    return this.request<QueueItem[]>(`/queue?${params}`);
  }

  postDecision(docId: string, verdict: Verdict, reviewerId?: string): Promise<DecisionOut> {
    return this.request<DecisionOut>(`/queue/${encodeURIComponent(docId)}/decision`, {
      method: 'POST',
      body: JSON.stringify({ verdict, reviewer_id: reviewerId ?? null }),
    });
  }

  getStats(): Promise<Digest> {
    return this.request<Digest>('/stats');
  }

  putThreshold(tau: number): Promise<ThresholdOut> {
    return this.request<ThresholdOut>('/config/threshold', {
      method: 'PUT',
      body: JSON.stringify({ tau }),
    });
  }

  postRetrain(): Promise<{ job_id: string }> {
    return this.request<{ job_id: string }>('/retrain', { method: 'POST' });
  }
}
