// Typed client for the steward service API. Every request carries the
// session token in X-Session-Token; every non-2xx response is raised as
// an ApiError carrying the server's error code and any extra fields
// (conflict responses include decided_by / decision / decided_candidate).

export interface SessionInfo {
  actor_id: string | null;
  capabilities: string[];
}

export interface AssetSummary {
  asset_id: string;
  asset_type: string;
  path_or_name: string;
  created_at: number;
  deleted_at: number | null;
  owner_id: string | null;
  cursor?: number;
}

export interface AssetPage {
  assets: AssetSummary[];
  next_cursor: number | null;
  total: number;
}

export interface AttributionSpan {
  owner_id: string;
  valid_from: number;
  valid_to: number | null;
  source: string;
}

export interface AttributionBreakdown {
  base_value: number;
  contributions: [string, number][];
  final_score: number;
  score_kind: string;
  probability: number;
}

export interface CounterfactualNote {
  feature_name: string;
  original_value: number;
  counterfactual_value: number;
  resulting_score: number;
  resulting_rank: number;
  sentence: string;
}

export interface RecommendationEntry {
  candidate_id: string;
  display_name: string;
  score: number;
  attribution?: AttributionBreakdown;
  counterfactual?: CounterfactualNote | null;
}

export interface Recommendation {
  recommendation_id: string;
  asset_id: string;
  asset_path: string | null;
  asset_type: string | null;
  as_of: number;
  band: string;
  model_id: string;
  status: "pending" | "decided" | "auto_applied";
  issue_seq: number;
  assignee: string | null;
  decided_by: string | null;
  decided_at: number | null;
  decision: string | null;
  decided_candidate: string | null;
  entries: RecommendationEntry[];
}

export interface RecommendationPage {
  recommendations: Recommendation[];
  next_cursor: number | null;
  total: number;
}

export interface AssetDetail extends AssetSummary {
  attribution: AttributionSpan[];
  annotations: {
    at: number;
    named_candidate: string;
    annotation_kind: string;
    source_location: string | null;
  }[];
  dependencies: string[];
  stale_owner: boolean;
  latest_recommendation: Recommendation | null;
}

export interface Candidate {
  candidate_id: string;
  candidate_type: string;
  display_name: string;
  org_node_id: string | null;
  active: boolean;
  cursor?: number;
}

export interface HealthBucket {
  asset_count: number;
  unowned_count: number;
  stale_owner_count: number;
  recommended_count: number;
  inconclusive_count: number;
  inconclusive_rate: number;
}

export interface HealthReport extends HealthBucket {
  as_of: number;
  stale_days: number;
  per_type: Record<string, HealthBucket>;
}

export interface ChurnBucket {
  day: number;
  date: string;
  added: number;
  deleted: number;
  changed: number;
  owner_changes: number;
}

export interface ChurnSeries {
  asset_type: string;
  from_day: number;
  to_day: number;
  buckets: ChurnBucket[];
}

export interface DecisionResult {
  decision_id: string;
  recommendation_id: string;
  asset_id: string;
  candidate_id: string;
  decision: string;
  new_owner: string | null;
  recommendation: Recommendation;
}

export type DecisionName = "Accept" | "Reject" | "Delegate";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
    readonly detail: Record<string, unknown> = {},
  ) {
    super(message);
    this.name = "ApiError";
  }

  // network-level failure, as opposed to a server-sent error
  get unreachable(): boolean {
    return this.status === 0;
  }
}

function qs(params: Record<string, string | number | undefined>): string {
  const parts: string[] = [];
  for (const [key, value] of Object.entries(params)) {
    if (value === undefined) continue;
    parts.push(`${encodeURIComponent(key)}=${encodeURIComponent(String(value))}`);
  }
  return parts.length ? "?" + parts.join("&") : "";
}

export class ApiClient {
  constructor(
    private token: string,
    private base: string = "",
  ) {}

  setToken(token: string): void {
    this.token = token;
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    let resp: Response;
    try {
      resp = await fetch(this.base + path, {
        method,
        headers: {
          "X-Session-Token": this.token,
          ...(body !== undefined ? { "Content-Type": "application/json" } : {}),
        },
        body: body !== undefined ? JSON.stringify(body) : undefined,
      });
    } catch (err) {
      throw new ApiError(0, "unreachable", `cannot reach the service: ${String(err)}`);
    }
    let payload: Record<string, unknown>;
    try {
      payload = (await resp.json()) as Record<string, unknown>;
    } catch {
      payload = {};
    }
    if (!resp.ok) {
      const code = typeof payload.error === "string" ? payload.error : "http_error";
      const message =
        typeof payload.message === "string" ? payload.message : `HTTP ${resp.status}`;
      throw new ApiError(resp.status, code, message, payload);
    }
    return payload as T;
  }

  session(): Promise<SessionInfo> {
    return this.request("GET", "/api/session");
  }

  assets(params: { type?: string; live?: string; cursor?: number; limit?: number } = {}): Promise<AssetPage> {
    return this.request("GET", "/api/assets" + qs(params));
  }

  asset(assetId: string): Promise<AssetDetail> {
    return this.request("GET", `/api/assets/${encodeURIComponent(assetId)}`);
  }

  recommendations(params: { status?: string; cursor?: number; limit?: number } = {}): Promise<RecommendationPage> {
    return this.request("GET", "/api/recommendations" + qs(params));
  }

  recommendation(recId: string): Promise<Recommendation> {
    return this.request("GET", `/api/recommendations/${encodeURIComponent(recId)}`);
  }

  candidates(params: { type?: string; active?: string; limit?: number } = {}): Promise<{ candidates: Candidate[]; next_cursor: number | null }> {
    return this.request("GET", "/api/candidates" + qs(params));
  }

  healthReport(params: { as_of?: number; stale_days?: number } = {}): Promise<HealthReport> {
    return this.request("GET", "/api/health-report" + qs(params));
  }

  churn(assetType: string, fromDay: number | string, toDay: number | string): Promise<ChurnSeries> {
    return this.request("GET", "/api/churn" + qs({ type: assetType, from: fromDay, to: toDay }));
  }

  decide(
    recId: string,
    decision: DecisionName,
    candidateId: string,
    delegateTo?: string,
  ): Promise<DecisionResult> {
    const body: Record<string, unknown> = { decision, candidate_id: candidateId };
    if (delegateTo !== undefined) body.delegate_to = delegateTo;
    return this.request("POST", `/api/recommendations/${encodeURIComponent(recId)}/decision`, body);
  }
}
