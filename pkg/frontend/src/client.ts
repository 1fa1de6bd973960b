// Thin typed client over the decision service. The fetch implementation is
// injectable so tests can run against an in-memory stub.

import type {
  ApiErrorBody,
  DecisionDto,
  MetricsDto,
  PolicyDto,
  ReviewItemDto,
  ReviewItemStatus,
  Verdict,
} from './types.js';

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  readonly code: string;
  readonly status: number;

  constructor(code: string, message: string, status: number) {
    super(message);
    this.code = code;
    this.status = status;
  }
}

async function parseError(response: Response): Promise<never> {
  let code = 'UNKNOWN';
  let message = `request failed with status ${response.status}`;
  try {
    const body = (await response.json()) as ApiErrorBody;
    if (body?.error?.code) {
      code = body.error.code;
      message = body.error.message;
    }
  } catch {
    // non-JSON error body; keep the generic message
  }
  throw new ApiError(code, message, response.status);
}

export interface ListReviewParams {
  status?: ReviewItemStatus;
  page?: number;
  pageSize?: number;
}

export class ApiClient {
  private readonly base: string;
  private readonly fetchImpl: FetchLike;

  constructor(baseUrl: string, fetchImpl: FetchLike = fetch) {
    this.base = baseUrl.replace(/\/$/, '');
    this.fetchImpl = fetchImpl;
  }

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchImpl(this.base + path, init);
    if (!response.ok) {
      await parseError(response);
    }
    return (await response.json()) as T;
  }

  private async post<T>(path: string, body: unknown): Promise<T> {
    return this.request<T>(path, {
      method: 'POST',
      headers: { 'content-type': 'application/json' },
      body: JSON.stringify(body),
    });
  }

  decide(sampleId: string, features: number[]): Promise<DecisionDto> {
    return this.post('/v1/decide', { sample_id: sampleId, features });
  }

  listReview(params: ListReviewParams = {}): Promise<ReviewItemDto[]> {
    const query = new URLSearchParams();
    if (params.status) query.set('status', params.status);
    if (params.page) query.set('page', String(params.page));
    if (params.pageSize) query.set('page_size', String(params.pageSize));
    const suffix = query.size ? `?${query.toString()}` : '';
    return this.request(`/v1/review${suffix}`);
  }

  submitVerdict(itemId: string, verdict: Verdict): Promise<ReviewItemDto> {
    return this.post(`/v1/review/${itemId}/verdict`, verdict);
  }

  recalibrate(percentile: number): Promise<PolicyDto> {
    return this.post('/v1/policy/recalibrate', { percentile });
  }

  policy(): Promise<PolicyDto> {
    return this.request('/v1/policy');
  }

  metrics(previewPercentile?: number): Promise<MetricsDto> {
    const suffix =
      previewPercentile === undefined ? '' : `?preview_percentile=${previewPercentile}`;
    return this.request(`/v1/metrics${suffix}`);
  }
}
