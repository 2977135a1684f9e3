import type {
  Camera,
  DryRunResponse,
  ErrorBody,
  FrameEvent,
  RedetectResult,
  Thresholds,
  ViolationPage,
  ViolationRecord,
  ViolationStatus,
} from './types.js';

export class ApiError extends Error {
  constructor(
    public status: number,
    public code: string,
    message: string,
    public details: Record<string, unknown> = {},
  ) {
    super(message);
    this.name = 'ApiError';
  }
}

export interface ViolationFilter {
  status?: ViolationStatus;
  camera?: string;
  from?: string;
  to?: string;
  page?: number;
  page_size?: number;
}

export interface RedetectRequest {
  frame_ids?: string[];
  from?: string;
  to?: string;
  camera?: string;
  override_thresholds?: Partial<Thresholds>;
  persist?: boolean;
  limit?: number;
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

function query(params: Record<string, string | number | undefined>): string {
  const q = new URLSearchParams();
  for (const [k, v] of Object.entries(params)) {
    if (v !== undefined) q.set(k, String(v));
  }
  const s = q.toString();
  return s ? `?${s}` : '';
}

export class ApiClient {
  constructor(
    private baseUrl = '',
    private token = '',
    private fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  setToken(token: string): void {
    this.token = token;
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const headers: Record<string, string> = {};
    if (body !== undefined) headers['Content-Type'] = 'application/json';
    if (this.token) headers['X-Operator-Token'] = this.token;
    const res = await this.fetchImpl(this.baseUrl + path, {
      method,
      headers,
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    if (!res.ok) {
      let parsed: Partial<ErrorBody> = {};
      try {
        parsed = (await res.json()) as Partial<ErrorBody>;
      } catch {
        // non-JSON error body; fall through to the generic message
      }
      throw new ApiError(
        res.status,
        parsed.code ?? 'unknown',
        parsed.message ?? `request failed with status ${res.status}`,
        parsed.details ?? {},
      );
    }
    return (await res.json()) as T;
  }

  listCameras(): Promise<Camera[]> {
    return this.request<{ cameras: Camera[] }>('GET', '/cameras').then((r) => r.cameras);
  }

  getCamera(cameraId: string): Promise<Camera> {
    return this.request('GET', `/cameras/${encodeURIComponent(cameraId)}`);
  }

  backgroundUrl(cameraId: string, panIndex: number): string {
    return `${this.baseUrl}/cameras/${encodeURIComponent(cameraId)}/pans/${panIndex}/background`;
  }

  patchConfig(
    cameraId: string,
    panIndex: number,
    patch: Partial<Thresholds> & { geometry?: unknown },
  ): Promise<Camera> {
    return this.request('PATCH', `/cameras/${encodeURIComponent(cameraId)}/pans/${panIndex}/config`, patch);
  }

  listViolations(filter: ViolationFilter = {}): Promise<ViolationPage> {
    return this.request('GET', `/violations${query({ ...filter })}`);
  }

  getViolation(violationId: string): Promise<ViolationRecord> {
    return this.request('GET', `/violations/${encodeURIComponent(violationId)}`);
  }

  reviewViolation(violationId: string, verdict: 'confirm' | 'dismiss', operator: string): Promise<ViolationRecord> {
    return this.request('POST', `/violations/${encodeURIComponent(violationId)}/review`, { verdict, operator });
  }

  slipUrl(violationId: string): string {
    return `${this.baseUrl}/violations/${encodeURIComponent(violationId)}/slip`;
  }

  listFrames(params: {
    camera?: string;
    pan?: number;
    event?: string;
    from?: string;
    to?: string;
    limit?: number;
  } = {}): Promise<FrameEvent[]> {
    return this.request<{ items: FrameEvent[] }>('GET', `/frames${query({ ...params })}`).then((r) => r.items);
  }

  frameImageUrl(frameId: string): string {
    return `${this.baseUrl}/frames/${encodeURIComponent(frameId)}/image`;
  }

  redetect(req: RedetectRequest): Promise<RedetectResult[]> {
    return this.request<{ results: RedetectResult[] }>('POST', '/redetect', req).then((r) => r.results);
  }

  calibrationDryRun(geometry: unknown, frameWidth: number, frameHeight: number): Promise<DryRunResponse> {
    return this.request('POST', '/calibration/dryrun', {
      geometry,
      frame_width: frameWidth,
      frame_height: frameHeight,
    });
  }
}
