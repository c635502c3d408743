import type {
  CreateDocumentBody,
  DecisionResult,
  DetectResult,
  ManualSpanBody,
  ManualSpanResult,
  ProjectView,
  UniformizeResult,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: string,
  ) {
    super(status ? `${status}: ${detail}` : detail);
    this.name = "ApiError";
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

/** What the UI needs from the service; `ServiceClient` is the real one,
 * tests substitute an in-memory fake. */
export interface ReviewApi {
  createDocument(body: CreateDocumentBody): Promise<ProjectView>;
  getDocument(id: string): Promise<ProjectView>;
  detect(id: string, version?: number): Promise<DetectResult>;
  uniformize(id: string, version: number, surfaces?: string[]): Promise<UniformizeResult>;
  decide(
    suggestionId: string,
    decision: "accept" | "reject",
    version: number,
    replacement?: string,
  ): Promise<DecisionResult>;
  addManualSpan(id: string, span: ManualSpanBody, version: number): Promise<ManualSpanResult>;
  exportDocument(id: string, format: "txt" | "html"): Promise<string>;
}

export class ServiceClient implements ReviewApi {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchFn?: FetchLike,
  ) {}

  async createDocument(body: CreateDocumentBody): Promise<ProjectView> {
    return this.json(await this.request("POST", "/documents", body));
  }

  async getDocument(id: string): Promise<ProjectView> {
    return this.json(await this.request("GET", `/documents/${encodeURIComponent(id)}`));
  }

  async detect(id: string, version?: number): Promise<DetectResult> {
    const query = version === undefined ? "" : `?version=${version}`;
    const response = await this.request(
      "POST",
      `/documents/${encodeURIComponent(id)}/detect${query}`,
    );
    if (response.status === 502) {
      // A detector being down is not fatal: the service still sends the
      // partial suggestion list, flagged in `unavailable`.
      const payload: unknown = await response.json().catch(() => null);
      if (payload && Array.isArray((payload as DetectResult).suggestions)) {
        return payload as DetectResult;
      }
      throw new ApiError(502, "detector backend unavailable");
    }
    return this.json(response);
  }

  async uniformize(id: string, version: number, surfaces?: string[]): Promise<UniformizeResult> {
    const body: { version: number; surfaces?: string[] } = { version };
    if (surfaces !== undefined) {
      body.surfaces = surfaces;
    }
    return this.json(
      await this.request("POST", `/documents/${encodeURIComponent(id)}/uniformize`, body),
    );
  }

  async decide(
    suggestionId: string,
    decision: "accept" | "reject",
    version: number,
    replacement?: string,
  ): Promise<DecisionResult> {
    const body: Record<string, unknown> = { decision, version };
    if (replacement !== undefined) {
      body.replacement = replacement;
    }
    return this.json(
      await this.request(
        "POST",
        `/suggestions/${encodeURIComponent(suggestionId)}/decision`,
        body,
      ),
    );
  }

  async addManualSpan(id: string, span: ManualSpanBody, version: number): Promise<ManualSpanResult> {
    return this.json(
      await this.request("POST", `/documents/${encodeURIComponent(id)}/manual-span`, {
        ...span,
        version,
      }),
    );
  }

  async exportDocument(id: string, format: "txt" | "html"): Promise<string> {
    const response = await this.request(
      "GET",
      `/documents/${encodeURIComponent(id)}/export?format=${format}`,
    );
    if (!response.ok) {
      throw await this.toError(response);
    }
    return response.text();
  }

  private async request(method: string, path: string, body?: unknown): Promise<Response> {
    const doFetch: FetchLike = this.fetchFn ?? ((input, init) => globalThis.fetch(input, init));
    const init: RequestInit = { method };
    if (body !== undefined) {
      init.headers = { "Content-Type": "application/json" };
      init.body = JSON.stringify(body);
    }
    try {
      return await doFetch(this.baseUrl + path, init);
    } catch (err) {
      throw new ApiError(0, `service unreachable at ${this.baseUrl}: ${String(err)}`);
    }
  }

  private async json<T>(response: Response): Promise<T> {
    if (!response.ok) {
      throw await this.toError(response);
    }
    return (await response.json()) as T;
  }

  private async toError(response: Response): Promise<ApiError> {
    let detail = response.statusText || `status ${response.status}`;
    try {
      const payload: unknown = await response.json();
      const fromBody = (payload as { detail?: unknown })?.detail;
      if (typeof fromBody === "string") {
        detail = fromBody;
      } else if (payload !== null) {
        detail = JSON.stringify(payload);
      }
    } catch {
      // keep the status text
    }
    return new ApiError(response.status, detail);
  }
}
