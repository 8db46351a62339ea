import type {
  ColorMode,
  ColorResponse,
  CompareResponse,
  ComponentsSummary,
  DatasetInfo,
  HistogramResponse,
  PcaSummary,
  SessionStatus,
  UmapSettings,
  VoronoiData,
} from './types.js';

export class ApiRequestError extends Error {
  constructor(
    public status: number,
    public code: string,
    message: string,
  ) {
    super(message);
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

/**
 * Thin typed client. The UI never computes statistics itself; every number
 * it shows comes through these calls.
 */
export class ApiClient {
  constructor(
    private baseUrl = '',
    private fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchFn(this.baseUrl + path, init);
    if (!response.ok) {
      let code = `HTTP${response.status}`;
      let message = response.statusText;
      try {
        const body = await response.json();
        code = body.code ?? code;
        message = body.message ?? message;
      } catch {
        /* non-JSON error body */
      }
      throw new ApiRequestError(response.status, code, message);
    }
    return (await response.json()) as T;
  }

  uploadDataset(csv: string | Blob, preprocessing: string): Promise<DatasetInfo> {
    const params = new URLSearchParams({ preprocessing });
    return this.request(`/datasets?${params}`, {
      method: 'POST',
      headers: { 'Content-Type': 'text/csv' },
      body: csv,
    });
  }

  createSession(
    datasetId: string,
    umap: UmapSettings,
    maxPcs: number,
  ): Promise<{ session_id: string }> {
    return this.request('/sessions', {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify({ dataset_id: datasetId, umap, max_pcs: maxPcs }),
    });
  }

  status(sessionId: string): Promise<SessionStatus> {
    return this.request(`/sessions/${sessionId}/status`);
  }

  pca(sessionId: string): Promise<PcaSummary> {
    return this.request(`/sessions/${sessionId}/pca`);
  }

  setComponents(sessionId: string, count: number): Promise<ComponentsSummary> {
    return this.request(`/sessions/${sessionId}/components`, {
      method: 'PUT',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify({ count }),
    });
  }

  voronoi(sessionId: string): Promise<VoronoiData> {
    return this.request(`/sessions/${sessionId}/voronoi`);
  }

  color(sessionId: string, mode: ColorMode): Promise<ColorResponse> {
    const params = new URLSearchParams({ mode: mode.kind });
    params.set('index', String(mode.index));
    return this.request(`/sessions/${sessionId}/color?${params}`);
  }

  addSelection(
    sessionId: string,
    name: string,
    indices: number[],
  ): Promise<{ name: string; size: number }> {
    return this.request(`/sessions/${sessionId}/selections`, {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify({ name, indices }),
    });
  }

  compare(sessionId: string, a: string, b: string): Promise<CompareResponse> {
    return this.request(`/sessions/${sessionId}/compare`, {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify({ a, b }),
    });
  }

  histogram(
    sessionId: string,
    variable: string,
    selections: string[],
    bins = 20,
  ): Promise<HistogramResponse> {
    const params = new URLSearchParams({
      var: variable,
      selections: selections.join(','),
      bins: String(bins),
    });
    return this.request(`/sessions/${sessionId}/histogram?${params}`);
  }

  transform(sessionId: string, values: number[]): Promise<{ coords: [number, number] }> {
    return this.request(`/sessions/${sessionId}/transform`, {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify({ values }),
    });
  }
}
