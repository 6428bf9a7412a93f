// In-memory stand-in for the steward service, installed as the global
// fetch. It mirrors the real pagination and conflict semantics so the
// views can be exercised without a server process.

import {
  Candidate,
  ChurnBucket,
  ChurnSeries,
  HealthBucket,
  HealthReport,
  Recommendation,
  RecommendationEntry,
} from "../src/api.js";

export interface FakeSession {
  actor_id: string | null;
  capabilities: string[];
}

export interface RecordedCall {
  method: string;
  url: string;
  headers: Record<string, string>;
  body: Record<string, unknown> | null;
}

export interface FakeWorld {
  sessions: Record<string, FakeSession>;
  recommendations: Recommendation[];
  candidates: Candidate[];
  health: HealthReport;
  churn: Record<string, ChurnSeries>;
  failNetwork: boolean;
  calls: RecordedCall[];
  // when set, POST decisions wait on this before being applied
  decisionGate: Promise<void> | null;
}

export function emptyHealth(): HealthReport {
  return {
    asset_count: 0,
    unowned_count: 0,
    stale_owner_count: 0,
    recommended_count: 0,
    inconclusive_count: 0,
    inconclusive_rate: 0.0,
    as_of: 1700000000.0,
    stale_days: 180,
    per_type: {},
  };
}

export function makeWorld(overrides: Partial<FakeWorld> = {}): FakeWorld {
  return {
    sessions: {
      "tok-alice": { actor_id: "alice", capabilities: ["Decide", "Ingest", "Read", "Train"] },
      "tok-read": { actor_id: null, capabilities: ["Read"] },
    },
    recommendations: [],
    candidates: [],
    health: emptyHealth(),
    churn: {},
    failNetwork: false,
    calls: [],
    decisionGate: null,
    ...overrides,
  };
}

const TYPES = ["SourceFile", "WarehouseTable", "ConfigFile"];

export function makeEntries(seq: number): RecommendationEntry[] {
  const entries: RecommendationEntry[] = [];
  const scores = [0.91, 0.55, 0.31, 0.22];
  for (let i = 0; i < 4; i++) {
    entries.push({
      candidate_id: `u${i + 1}`,
      display_name: `User ${i + 1}`,
      score: scores[i] + seq * 1e-6,
      attribution: {
        base_value: 0.5,
        contributions: [
          ["touch_count_90d", 0.52],
          ["recency_days", -0.13],
          ["path_affinity", 0.02 + i * 0.01],
        ],
        final_score: scores[i] + seq * 1e-6,
        score_kind: "probability",
        probability: scores[i] + seq * 1e-6,
      },
      counterfactual: null,
    });
  }
  entries[3].counterfactual = {
    feature_name: "touch_count_90d",
    original_value: 1,
    counterfactual_value: 7,
    resulting_score: 0.88,
    resulting_rank: 1,
    sentence: `If touch_count_90d were 7 instead of 1, User 4 would rank 1 for item ${seq}.`,
  };
  return entries;
}

export function makeRec(seq: number, over: Partial<Recommendation> = {}): Recommendation {
  return {
    recommendation_id: `rec-${String(seq).padStart(8, "0")}`,
    asset_id: `asset-${seq}`,
    asset_path: `src/mod_${seq}.py`,
    asset_type: TYPES[seq % TYPES.length],
    as_of: 1700000000 + seq,
    band: "NeedsReview",
    model_id: "model-test",
    status: "pending",
    issue_seq: seq,
    assignee: null,
    decided_by: null,
    decided_at: null,
    decision: null,
    decided_candidate: null,
    entries: makeEntries(seq),
    ...over,
  };
}

function json(status: number, body: unknown): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

function problem(status: number, code: string, message: string, extra: Record<string, unknown> = {}): Response {
  return json(status, { error: code, message, ...extra });
}

function listRecommendations(world: FakeWorld, query: URLSearchParams): Response {
  const status = query.get("status");
  const cursor = query.has("cursor") ? Number(query.get("cursor")) : -1;
  const limit = query.has("limit") ? Number(query.get("limit")) : 50;
  const matching = world.recommendations
    .filter((r) => !status || r.status === status)
    .sort((a, b) => a.issue_seq - b.issue_seq);
  const page = matching.filter((r) => r.issue_seq > cursor).slice(0, limit);
  const next = page.length === limit ? page[page.length - 1].issue_seq : null;
  return json(200, { recommendations: page, next_cursor: next, total: matching.length });
}

function applyDecision(
  world: FakeWorld,
  session: FakeSession,
  recId: string,
  body: Record<string, unknown>,
): Response {
  const rec = world.recommendations.find((r) => r.recommendation_id === recId);
  if (!rec) return problem(404, "unknown_recommendation", recId);
  if (rec.status !== "pending") {
    return problem(409, "stale_recommendation", `${recId} was already decided`, {
      decided_by: rec.decided_by,
      decision: rec.decision,
      decided_candidate: rec.decided_candidate,
      status: rec.status,
    });
  }
  const decision = String(body.decision ?? "");
  const candidateId = String(body.candidate_id ?? "");
  if (!rec.entries.some((e) => e.candidate_id === candidateId)) {
    return problem(400, "candidate_not_in_recommendation", candidateId);
  }
  let newOwner: string | null = null;
  if (decision === "Delegate") {
    rec.assignee = typeof body.delegate_to === "string" ? body.delegate_to : null;
  } else {
    rec.status = "decided";
    rec.decided_by = session.actor_id;
    rec.decided_at = 1700001000;
    rec.decision = decision;
    rec.decided_candidate = candidateId;
    if (decision === "Accept") newOwner = candidateId;
  }
  return json(200, {
    decision_id: "dec-00000001",
    recommendation_id: recId,
    asset_id: rec.asset_id,
    candidate_id: candidateId,
    decision,
    new_owner: newOwner,
    recommendation: rec,
  });
}

export function installFakeFetch(world: FakeWorld): void {
  globalThis.fetch = (async (input: RequestInfo | URL, init?: RequestInit): Promise<Response> => {
    const rawUrl = typeof input === "string" ? input : input.toString();
    const method = init?.method ?? "GET";
    const headers = (init?.headers ?? {}) as Record<string, string>;
    const body = init?.body ? (JSON.parse(String(init.body)) as Record<string, unknown>) : null;
    world.calls.push({ method, url: rawUrl, headers, body });
    if (world.failNetwork) throw new TypeError("fetch failed");

    const url = new URL(rawUrl, "http://fake.test");
    const parts = url.pathname.split("/").filter(Boolean);
    const token = headers["X-Session-Token"] ?? "";
    const session = world.sessions[token];
    if (!session) return problem(401, "unauthorized", "missing or unknown session token");

    if (method === "GET" && url.pathname === "/api/session") {
      return json(200, { actor_id: session.actor_id, capabilities: [...session.capabilities].sort() });
    }
    if (method === "GET" && url.pathname === "/api/recommendations") {
      return listRecommendations(world, url.searchParams);
    }
    if (method === "GET" && parts.length === 3 && parts[1] === "recommendations") {
      const rec = world.recommendations.find((r) => r.recommendation_id === parts[2]);
      return rec ? json(200, rec) : problem(404, "unknown_recommendation", parts[2]);
    }
    if (method === "POST" && parts.length === 4 && parts[1] === "recommendations" && parts[3] === "decision") {
      if (!session.capabilities.includes("Decide")) {
        return problem(403, "forbidden", "session lacks the Decide capability");
      }
      if (world.decisionGate) await world.decisionGate;
      return applyDecision(world, session, parts[2], body ?? {});
    }
    if (method === "GET" && url.pathname === "/api/candidates") {
      const type = url.searchParams.get("type");
      const active = url.searchParams.get("active");
      const items = world.candidates.filter(
        (c) => (!type || c.candidate_type === type) && (active !== "1" || c.active),
      );
      return json(200, { candidates: items, next_cursor: null });
    }
    if (method === "GET" && url.pathname === "/api/health-report") {
      return json(200, world.health);
    }
    if (method === "GET" && url.pathname === "/api/churn") {
      const type = url.searchParams.get("type") ?? "";
      const series = world.churn[type];
      if (!series) return problem(400, "bad_parameter", `unknown asset type '${type}'`);
      return json(200, series);
    }
    return problem(404, "not_found", url.pathname);
  }) as typeof fetch;
}

export function makeChurn(assetType: string, fromDay: number, days: number): ChurnSeries {
  const buckets: ChurnBucket[] = [];
  for (let i = 0; i < days; i++) {
    const day = fromDay + i;
    buckets.push({
      day,
      date: new Date(day * 86400 * 1000).toISOString().slice(0, 10),
      added: (i * 7) % 5,
      deleted: (i * 3) % 4,
      changed: (i * 11) % 9,
      owner_changes: (i * 13) % 3,
    });
  }
  return { asset_type: assetType, from_day: fromDay, to_day: fromDay + days - 1, buckets };
}

export function makeBucket(over: Partial<HealthBucket> = {}): HealthBucket {
  return {
    asset_count: 0,
    unowned_count: 0,
    stale_owner_count: 0,
    recommended_count: 0,
    inconclusive_count: 0,
    inconclusive_rate: 0.0,
    ...over,
  };
}
