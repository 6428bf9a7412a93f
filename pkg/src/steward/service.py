"""HTTP surface over one store: browse, decide, ingest, train, report.

Requests are handled on worker threads, but every API request runs under a
single process-wide lock, so the API is linearizable per store: a race of
two Accepts on one recommendation resolves as one success and one conflict.
Mutations go through the normal store paths and therefore append exactly
one event per state change; reads never write.

Authentication is a static token table. A request carries its token in the
X-Session-Token header; the session supplies the actor identity used for
decisions, so a request body can never forge who decided. The static UI
bundle is served without a token (the app asks for one at runtime).
"""

from __future__ import annotations

import json
import logging
import os
import threading
import time
from dataclasses import dataclass
from datetime import datetime, timezone
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Optional
from urllib.parse import parse_qs, urlparse

from . import health as health_mod
from . import learn
from .errors import BindFailure, StaleRecommendation, StewardError
from .ingest import parse_log_lines, LogIngestor
from .model import AssetType, CandidateType, Decision, SECONDS_PER_DAY
from .recommend import apply_decision
from .store import RecommendationState, Store

_LOG = logging.getLogger("steward.service")

CAP_READ = "Read"
CAP_DECIDE = "Decide"
CAP_INGEST = "Ingest"
CAP_TRAIN = "Train"
ALL_CAPABILITIES = frozenset({CAP_READ, CAP_DECIDE, CAP_INGEST, CAP_TRAIN})

_STATUS_FOR_CODE = {
    "unknown_asset": 404,
    "unknown_candidate": 404,
    "unknown_org_node": 404,
    "unknown_recommendation": 404,
    "no_model_for_asset_type": 404,
    "stale_recommendation": 409,
    "redundant_transfer": 409,
    "non_monotonic_timestamp": 409,
    "store_locked": 423,
}

_CONTENT_TYPES = {
    ".html": "text/html; charset=utf-8",
    ".js": "text/javascript; charset=utf-8",
    ".mjs": "text/javascript; charset=utf-8",
    ".css": "text/css; charset=utf-8",
    ".json": "application/json",
    ".map": "application/json",
    ".svg": "image/svg+xml",
    ".png": "image/png",
    ".ico": "image/x-icon",
    ".txt": "text/plain; charset=utf-8",
}

_PLACEHOLDER_PAGE = (
    "<!doctype html><title>steward</title>"
    "<h1>steward service</h1>"
    "<p>The API is up at <code>/api</code>. No review UI bundle is installed; "
    "start the service with a static directory to serve one.</p>"
)


class _HttpProblem(Exception):
    """Non-domain request failure carrying its HTTP status."""

    def __init__(self, status: int, code: str, message: str, extra: Optional[dict] = None):
        super().__init__(message)
        self.status = status
        self.code = code
        self.extra = extra or {}


@dataclass(frozen=True)
class ApiSession:
    token: str
    actor_id: Optional[str]
    capabilities: frozenset


class Service:
    """Bind a store to an HTTP port. start() is non-blocking; tests use
    port 0 and read .port back."""

    def __init__(self, store: Store, static_dir: Optional[str] = None, clock=time.time):
        self.store = store
        self.static_dir = static_dir
        self.clock = clock
        self.sessions: dict[str, ApiSession] = {}
        self.lock = threading.RLock()
        self._httpd: Optional[ThreadingHTTPServer] = None
        self._thread: Optional[threading.Thread] = None

    def add_session(self, token, actor_id=None, capabilities=ALL_CAPABILITIES) -> ApiSession:
        session = ApiSession(token, actor_id, frozenset(capabilities))
        self.sessions[token] = session
        return session

    @property
    def port(self) -> Optional[int]:
        return self._httpd.server_address[1] if self._httpd else None

    def start(self, host: str = "127.0.0.1", port: int = 0) -> int:
        handler = _make_handler(self)
        try:
            self._httpd = ThreadingHTTPServer((host, port), handler)
        except OSError as exc:
            raise BindFailure(f"cannot bind {host}:{port}: {exc}") from exc
        self._httpd.daemon_threads = True
        self._thread = threading.Thread(
            target=self._httpd.serve_forever, name="steward-service", daemon=True
        )
        self._thread.start()
        return self.port

    def stop(self) -> None:
        if self._httpd is not None:
            self._httpd.shutdown()
            self._httpd.server_close()
            self._httpd = None
        if self._thread is not None:
            self._thread.join(timeout=5.0)
            self._thread = None


# ----------------------------------------------------------------------
# serialization helpers
# ----------------------------------------------------------------------


def _now(store: Store, clock) -> float:
    return store.max_event_ts if store.max_event_ts > 0 else float(clock())


def _asset_payload(store: Store, asset_id: str) -> dict:
    asset = store.assets[asset_id]
    at = max(store.max_event_ts, asset.created_at)
    return {
        "asset_id": asset.asset_id,
        "asset_type": asset.asset_type.value,
        "path_or_name": asset.path_or_name,
        "created_at": asset.created_at,
        "deleted_at": asset.deleted_at,
        "owner_id": store.current_owner(asset_id, at),
    }


def _recommendation_payload(store: Store, state: RecommendationState) -> dict:
    asset = store.assets.get(state.asset_id)
    entries = []
    for raw in state.entries:
        entry = dict(raw)
        candidate = store.candidates.get(raw["candidate_id"])
        entry["display_name"] = candidate.display_name if candidate else raw["candidate_id"]
        entries.append(entry)
    return {
        "recommendation_id": state.recommendation_id,
        "asset_id": state.asset_id,
        "asset_path": asset.path_or_name if asset else None,
        "asset_type": asset.asset_type.value if asset else None,
        "as_of": state.as_of,
        "band": state.band,
        "model_id": state.model_id,
        "status": state.status,
        "issue_seq": state.issue_seq,
        "assignee": state.assignee,
        "decided_by": state.decided_by,
        "decided_at": state.decided_at,
        "decision": state.decision,
        "decided_candidate": state.decided_candidate,
        "entries": entries,
    }


def _model_payload(meta: dict) -> dict:
    return {
        "model_id": meta.get("model_id"),
        "kind": meta.get("kind"),
        "asset_type": meta.get("asset_type"),
        "schema_version": meta.get("schema_version"),
        "trained_at": meta.get("trained_at"),
        "window_days": meta.get("window_days"),
        "metrics": meta.get("metrics", {}),
        "dropped_features": meta.get("dropped_features", []),
    }


def _health_payload(report) -> dict:
    def bucket(b) -> dict:
        return {
            "asset_count": b.asset_count,
            "unowned_count": b.unowned_count,
            "stale_owner_count": b.stale_owner_count,
            "recommended_count": b.recommended_count,
            "inconclusive_count": b.inconclusive_count,
            "inconclusive_rate": b.inconclusive_rate,
        }

    payload = bucket(report)
    payload["as_of"] = report.as_of
    payload["stale_days"] = report.stale_days
    payload["per_type"] = {name: bucket(b) for name, b in sorted(report.per_type.items())}
    return payload


def _day_param(value: str, name: str) -> int:
    """Accepts a UTC day index or a YYYY-MM-DD date."""
    try:
        return int(value)
    except ValueError:
        pass
    try:
        dt = datetime.strptime(value, "%Y-%m-%d").replace(tzinfo=timezone.utc)
    except ValueError:
        raise _HttpProblem(400, "bad_parameter", f"{name}: expected day index or YYYY-MM-DD")
    return int(dt.timestamp() // SECONDS_PER_DAY)


def _int_param(query: dict, name: str, default: int, lo: int, hi: int) -> int:
    raw = query.get(name)
    if raw is None:
        return default
    try:
        value = int(raw)
    except ValueError:
        raise _HttpProblem(400, "bad_parameter", f"{name} must be an integer")
    return max(lo, min(hi, value))


# ----------------------------------------------------------------------
# request handler
# ----------------------------------------------------------------------


def _make_handler(service: Service):
    class Handler(BaseHTTPRequestHandler):
        protocol_version = "HTTP/1.1"
        server_version = "steward"

        # route chatter through logging instead of stderr
        def log_message(self, fmt, *args):
            _LOG.debug("%s %s", self.address_string(), fmt % args)

        def do_GET(self):
            self._dispatch("GET")

        def do_POST(self):
            self._dispatch("POST")

        # ---- plumbing ----

        def _dispatch(self, method: str) -> None:
            try:
                parsed = urlparse(self.path)
                query = {k: v[-1] for k, v in parse_qs(parsed.query).items()}
                parts = [p for p in parsed.path.split("/") if p]
                if parts[:1] == ["api"]:
                    with service.lock:
                        self._api(method, parts[1:], query)
                elif method == "GET":
                    self._static(parsed.path)
                else:
                    self._json(404, {"error": "not_found", "message": parsed.path})
            except (BrokenPipeError, ConnectionResetError):
                pass
            except _HttpProblem as problem:
                body = {"error": problem.code, "message": str(problem)}
                body.update(problem.extra)
                self._json(problem.status, body)
            except StewardError as exc:
                status = _STATUS_FOR_CODE.get(exc.code, 400)
                self._json(status, {"error": exc.code, "message": str(exc)})
            except Exception as exc:  # pragma: no cover - defensive
                _LOG.exception("unhandled error serving %s", self.path)
                self._json(500, {"error": "internal", "message": str(exc)})

        def _json(self, status: int, body: dict) -> None:
            data = json.dumps(body).encode("utf-8")
            self.send_response(status)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(data)))
            self.end_headers()
            self.wfile.write(data)

        def _raw(self, status: int, data: bytes, content_type: str) -> None:
            self.send_response(status)
            self.send_header("Content-Type", content_type)
            self.send_header("Content-Length", str(len(data)))
            self.end_headers()
            self.wfile.write(data)

        def _body(self) -> dict:
            length = int(self.headers.get("Content-Length") or 0)
            if length > 50_000_000:
                raise _HttpProblem(413, "too_large", "request body too large")
            raw = self.rfile.read(length) if length else b""
            if not raw:
                return {}
            try:
                parsed = json.loads(raw)
            except ValueError:
                raise _HttpProblem(400, "bad_json", "request body is not valid JSON")
            if not isinstance(parsed, dict):
                raise _HttpProblem(400, "bad_json", "request body must be a JSON object")
            return parsed

        def _session(self, capability: str) -> ApiSession:
            token = self.headers.get("X-Session-Token", "")
            session = service.sessions.get(token)
            if session is None:
                raise _HttpProblem(401, "unauthorized", "missing or unknown session token")
            if capability not in session.capabilities:
                raise _HttpProblem(
                    403, "forbidden", f"session lacks the {capability} capability"
                )
            return session

        # ---- API routes ----

        def _api(self, method: str, route: list, query: dict) -> None:
            if method == "GET":
                if route == ["assets"]:
                    return self._list_assets(query)
                if len(route) == 2 and route[0] == "assets":
                    return self._asset_detail(route[1])
                if route == ["recommendations"]:
                    return self._list_recommendations(query)
                if len(route) == 2 and route[0] == "recommendations":
                    return self._recommendation_detail(route[1])
                if route == ["candidates"]:
                    return self._list_candidates(query)
                if route == ["health-report"]:
                    return self._health_report(query)
                if route == ["churn"]:
                    return self._churn(query)
                if route == ["models", "current"]:
                    return self._models_current()
                if route == ["session"]:
                    session = self._session(CAP_READ)
                    return self._json(
                        200,
                        {
                            "actor_id": session.actor_id,
                            "capabilities": sorted(session.capabilities),
                        },
                    )
            if method == "POST":
                if len(route) == 3 and route[0] == "recommendations" and route[2] == "decision":
                    return self._decide(route[1])
                if route == ["ingest", "logs"]:
                    return self._ingest_logs()
                if route == ["train"]:
                    return self._train()
            raise _HttpProblem(404, "not_found", "/" + "/".join(["api"] + route))

        def _list_assets(self, query: dict) -> None:
            self._session(CAP_READ)
            store = service.store
            cursor = _int_param(query, "cursor", -1, -1, 1 << 62)
            limit = _int_param(query, "limit", 100, 1, 500)
            type_filter = query.get("type")
            if type_filter is not None:
                try:
                    AssetType(type_filter)
                except ValueError:
                    raise _HttpProblem(400, "bad_parameter", f"unknown asset type {type_filter!r}")
            live_only = query.get("live") in ("1", "true", "yes")
            now = _now(store, service.clock)
            items = []
            next_cursor = None
            # assets dict preserves registration order, so the position is a
            # stable sequence cursor for an append-only listing
            for position, (asset_id, asset) in enumerate(store.assets.items()):
                if position <= cursor:
                    continue
                if type_filter and asset.asset_type.value != type_filter:
                    continue
                if live_only and not asset.is_live(now):
                    continue
                payload = _asset_payload(store, asset_id)
                payload["cursor"] = position
                items.append(payload)
                if len(items) >= limit:
                    next_cursor = position
                    break
            total = sum(
                1
                for asset in store.assets.values()
                if (not type_filter or asset.asset_type.value == type_filter)
                and (not live_only or asset.is_live(now))
            )
            self._json(200, {"assets": items, "next_cursor": next_cursor, "total": total})

        def _asset_detail(self, asset_id: str) -> None:
            self._session(CAP_READ)
            store = service.store
            if asset_id not in store.assets:
                raise _HttpProblem(404, "unknown_asset", asset_id)
            payload = _asset_payload(store, asset_id)
            now = max(store.max_event_ts, store.assets[asset_id].created_at)
            payload["attribution"] = [
                {
                    "owner_id": rec.owner_id,
                    "valid_from": rec.valid_from,
                    "valid_to": rec.valid_to,
                    "source": rec.source.value,
                }
                for rec in store.attribution.get(asset_id, [])
            ]
            payload["annotations"] = [
                {
                    "at": at,
                    "named_candidate": ann.named_candidate,
                    "annotation_kind": ann.annotation_kind.value,
                    "source_location": ann.source_location,
                }
                for at, ann in store.annotations_for(asset_id)
            ]
            payload["dependencies"] = store.dependency_edges(asset_id)
            payload["stale_owner"] = health_mod.is_stale_owner(
                store, asset_id, now, health_mod.STALE_DAYS_DEFAULT
            )
            latest = store.latest_recommendation(asset_id)
            payload["latest_recommendation"] = (
                _recommendation_payload(store, latest) if latest else None
            )
            self._json(200, payload)

        def _list_recommendations(self, query: dict) -> None:
            self._session(CAP_READ)
            store = service.store
            status = query.get("status")
            if status is not None and status not in ("pending", "decided", "auto_applied"):
                raise _HttpProblem(400, "bad_parameter", f"unknown status {status!r}")
            cursor = _int_param(query, "cursor", -1, -1, 1 << 62)
            limit = _int_param(query, "limit", 50, 1, 200)
            states = store.list_recommendations(status=status, cursor=cursor, limit=limit)
            items = [_recommendation_payload(store, s) for s in states]
            next_cursor = states[-1].issue_seq if len(states) == limit else None
            total = len(store.list_recommendations(status=status))
            self._json(
                200,
                {"recommendations": items, "next_cursor": next_cursor, "total": total},
            )

        def _recommendation_detail(self, rec_id: str) -> None:
            self._session(CAP_READ)
            state = service.store.get_recommendation(rec_id)
            if state is None:
                raise _HttpProblem(404, "unknown_recommendation", rec_id)
            self._json(200, _recommendation_payload(service.store, state))

        def _list_candidates(self, query: dict) -> None:
            self._session(CAP_READ)
            store = service.store
            cursor = _int_param(query, "cursor", -1, -1, 1 << 62)
            limit = _int_param(query, "limit", 200, 1, 1000)
            type_filter = query.get("type")
            active_only = query.get("active") in ("1", "true", "yes")
            items = []
            next_cursor = None
            for position, candidate in enumerate(store.candidates.values()):
                if position <= cursor:
                    continue
                if type_filter and candidate.candidate_type.value != type_filter:
                    continue
                if active_only and not candidate.active:
                    continue
                items.append(
                    {
                        "candidate_id": candidate.candidate_id,
                        "candidate_type": candidate.candidate_type.value,
                        "display_name": candidate.display_name,
                        "org_node_id": candidate.org_node_id,
                        "active": candidate.active,
                        "cursor": position,
                    }
                )
                if len(items) >= limit:
                    next_cursor = position
                    break
            self._json(200, {"candidates": items, "next_cursor": next_cursor})

        def _health_report(self, query: dict) -> None:
            self._session(CAP_READ)
            store = service.store
            as_of = float(query.get("as_of", _now(store, service.clock)))
            stale_days = _int_param(query, "stale_days", health_mod.STALE_DAYS_DEFAULT, 1, 10_000)
            report = health_mod.health_report(store, as_of, stale_days)
            self._json(200, _health_payload(report))

        def _churn(self, query: dict) -> None:
            self._session(CAP_READ)
            store = service.store
            type_name = query.get("type")
            if not type_name:
                raise _HttpProblem(400, "bad_parameter", "type is required")
            try:
                asset_type = AssetType(type_name)
            except ValueError:
                raise _HttpProblem(400, "bad_parameter", f"unknown asset type {type_name!r}")
            if "from" not in query or "to" not in query:
                raise _HttpProblem(400, "bad_parameter", "from and to are required")
            from_day = _day_param(query["from"], "from")
            to_day = _day_param(query["to"], "to")
            series = health_mod.churn(store, asset_type, from_day, to_day)
            buckets = [
                {
                    "day": b.day,
                    "date": datetime.fromtimestamp(
                        b.day * SECONDS_PER_DAY, tz=timezone.utc
                    ).strftime("%Y-%m-%d"),
                    "added": b.added,
                    "deleted": b.deleted,
                    "changed": b.changed,
                    "owner_changes": b.owner_changes,
                }
                for b in series.buckets
            ]
            self._json(
                200,
                {
                    "asset_type": asset_type.value,
                    "from_day": from_day,
                    "to_day": to_day,
                    "buckets": buckets,
                },
            )

        def _models_current(self) -> None:
            self._session(CAP_READ)
            store = service.store
            models = [
                _model_payload(meta)
                for _, meta in sorted(store.models_current.items())
            ]
            self._json(200, {"models": models})

        def _decide(self, rec_id: str) -> None:
            session = self._session(CAP_DECIDE)
            store = service.store
            # decisions carry the session's identity, and that identity must
            # be a person who is still around to be accountable for it
            actor = store.candidates.get(session.actor_id or "")
            if (
                actor is None
                or not actor.active
                or actor.candidate_type is not CandidateType.INDIVIDUAL
            ):
                raise _HttpProblem(
                    403, "forbidden", "deciding requires an active Individual actor"
                )
            body = self._body()
            decision_name = body.get("decision")
            try:
                decision = Decision(decision_name)
            except ValueError:
                raise _HttpProblem(
                    400, "bad_parameter", f"decision must be Accept|Reject|Delegate, got {decision_name!r}"
                )
            candidate_id = body.get("candidate_id")
            if not candidate_id:
                raise _HttpProblem(400, "bad_parameter", "candidate_id is required")
            at = float(body.get("at", service.clock()))
            try:
                result = apply_decision(
                    store,
                    rec_id,
                    candidate_id,
                    decision,
                    decided_by=session.actor_id,
                    at=at,
                    delegate_to=body.get("delegate_to"),
                )
            except StaleRecommendation as exc:
                state = store.get_recommendation(rec_id)
                extra = {}
                if state is not None:
                    extra = {
                        "decided_by": state.decided_by,
                        "decision": state.decision,
                        "decided_candidate": state.decided_candidate,
                        "status": state.status,
                    }
                raise _HttpProblem(409, exc.code, str(exc), extra)
            state = store.get_recommendation(rec_id)
            self._json(
                200,
                {
                    "decision_id": result.decision_id,
                    "recommendation_id": result.recommendation_id,
                    "asset_id": result.asset_id,
                    "candidate_id": result.candidate_id,
                    "decision": result.decision.value,
                    "new_owner": result.new_owner,
                    "recommendation": _recommendation_payload(store, state),
                },
            )

        def _ingest_logs(self) -> None:
            self._session(CAP_INGEST)
            store = service.store
            body = self._body()
            format_tag = body.get("format")
            lines = body.get("lines")
            if not format_tag or not isinstance(lines, list):
                raise _HttpProblem(
                    400, "bad_parameter", "body needs format and a list of lines"
                )
            source_id = str(body.get("source_id") or "api")
            ingestor = LogIngestor(store)
            events, diagnostics = parse_log_lines(
                [str(line) for line in lines], format_tag, source_id, ingestor.resolve
            )
            merged = store.record_interactions(events)
            self._json(
                200,
                {
                    "merged": merged,
                    "parsed": len(events),
                    "diagnostics": [
                        {"line_number": d.line_number, "reason": d.reason}
                        for d in diagnostics
                    ],
                },
            )

        def _train(self) -> None:
            self._session(CAP_TRAIN)
            store = service.store
            body = self._body()
            type_name = body.get("asset_type")
            try:
                asset_type = AssetType(type_name)
            except ValueError:
                raise _HttpProblem(400, "bad_parameter", f"unknown asset type {type_name!r}")
            config = learn.TrainConfig(
                model_kind=body.get("model", learn.KIND_TREE),
                seed=int(body.get("seed", 0)),
            )
            window_days = body.get("window_days")
            if window_days is not None:
                window_days = int(window_days)
            # default to the newest event time, not the wall clock, so a
            # train call on a fixed store is reproducible
            now = float(body.get("now", _now(store, service.clock)))
            model = learn.train_for_asset_type(store, asset_type, now, config, window_days)
            model_id = learn.store_model(store, model)
            meta = dict(store.models_by_id[model_id])
            meta.pop("blob", None)
            self._json(200, _model_payload(meta))

        # ---- static files ----

        def _static(self, path: str) -> None:
            base = service.static_dir
            if base is None:
                if path == "/":
                    return self._raw(
                        200, _PLACEHOLDER_PAGE.encode("utf-8"), _CONTENT_TYPES[".html"]
                    )
                raise _HttpProblem(404, "not_found", path)
            root = os.path.realpath(base)
            rel = path.lstrip("/") or "index.html"
            full = os.path.realpath(os.path.join(root, rel))
            if full != root and not full.startswith(root + os.sep):
                raise _HttpProblem(404, "not_found", path)
            if os.path.isdir(full):
                full = os.path.join(full, "index.html")
            if not os.path.isfile(full):
                # single-page app routes fall back to the shell
                fallback = os.path.join(root, "index.html")
                if "." not in os.path.basename(rel) and os.path.isfile(fallback):
                    full = fallback
                else:
                    raise _HttpProblem(404, "not_found", path)
            ext = os.path.splitext(full)[1].lower()
            content_type = _CONTENT_TYPES.get(ext, "application/octet-stream")
            with open(full, "rb") as fh:
                data = fh.read()
            self._raw(200, data, content_type)

    return Handler
