/** Thin typed client for the rating service HTTP API. */

export interface ApiItem {
  sample_id: string;
  audio_uri: string;
  annotation_source: string;
  annotation_text: string;
}

export interface RatingSubmission {
  rater_id: string;
  sample_id: string;
  annotation_source: string;
  score: number;
}

export interface SourceReport {
  source: string;
  mean: number;
  distribution: Record<string, number>;
  n_ratings: number;
  coverage: number;
  low_coverage_samples: string[];
}

export interface MosReport {
  sources: SourceReport[];
  n_ratings: number;
}

export class ApiError extends Error {
  constructor(message: string, readonly status?: number) {
    super(message);
    this.name = "ApiError";
  }
}

type FetchFn = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  private readonly fetchFn: FetchFn;

  constructor(
    private readonly baseUrl: string = "",
    fetchFn?: FetchFn,
  ) {
    this.fetchFn = fetchFn ?? ((input, init) => fetch(input, init));
  }

  private async request(path: string, init?: RequestInit): Promise<Response> {
    let response: Response;
    try {
      response = await this.fetchFn(this.baseUrl + path, init);
    } catch (err) {
      throw new ApiError(`network error: ${String(err)}`);
    }
    if (!response.ok && response.status !== 204) {
      throw new ApiError(`request failed: ${path}`, response.status);
    }
    return response;
  }

  async createSession(): Promise<string> {
    const response = await this.request("/api/session", { method: "POST" });
    const body = (await response.json()) as { rater_id: string };
    return body.rater_id;
  }

  /** Next item for this rater, or null when every item has been rated. */
  async nextItem(raterId: string): Promise<ApiItem | null> {
    const response = await this.request(
      `/api/next?rater_id=${encodeURIComponent(raterId)}`,
    );
    if (response.status === 204) {
      return null;
    }
    return (await response.json()) as ApiItem;
  }

  async submitRating(rating: RatingSubmission): Promise<void> {
    await this.request("/api/rating", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(rating),
    });
  }

  async report(): Promise<MosReport> {
    const response = await this.request("/api/report");
    return (await response.json()) as MosReport;
  }
}
