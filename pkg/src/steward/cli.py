"""Operator command line for batch workflows.

Subcommands cover the whole loop: ingest activity logs and annotations,
train models, issue and decide recommendations, report on health and
churn, generate synthetic worlds, score them against their answer key,
and serve the HTTP API.

Output is line-oriented and deterministic: the same store, argv, and seed
produce byte-identical stdout. Anything diagnostic goes to stderr. Exit
codes: 0 success, 1 domain error, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from datetime import datetime, timezone
from typing import Optional

from . import learn, simulate
from .errors import StewardError, UnreadableFile, ValidationError
from .explain import attribution_to_text
from .health import STALE_DAYS_DEFAULT, churn, churn_to_tsv, health_report
from .ingest import LogIngestor, parse_log_file
from .model import AssetType, Decision, SECONDS_PER_DAY
from .persist import EventLog
from .recommend import issue, recommend_owner, apply_decision
from .service import ALL_CAPABILITIES, CAP_INGEST, CAP_READ, CAP_TRAIN, Service
from .store import Store

STORE_ENV_VAR = "STEWARD_STORE"
DEFAULT_STORE = "steward.events"


def _open_store(path: str, fsync: bool = True) -> Store:
    return Store(EventLog.open(path, fsync=fsync))


def _day_value(text: str) -> int:
    """A churn boundary: UTC day index, or a YYYY-MM-DD date."""
    try:
        return int(text)
    except ValueError:
        pass
    try:
        dt = datetime.strptime(text, "%Y-%m-%d").replace(tzinfo=timezone.utc)
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"{text!r}: expected a day index or YYYY-MM-DD"
        ) from None
    return int(dt.timestamp() // SECONDS_PER_DAY)


def _asset_type(text: str) -> AssetType:
    try:
        return AssetType(text)
    except ValueError:
        names = ", ".join(t.value for t in AssetType)
        raise argparse.ArgumentTypeError(f"{text!r}: expected one of {names}") from None


def _reference_time(store: Store) -> float:
    """Just past the newest event, so everything recorded so far counts."""
    return store.max_event_ts + 1.0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="steward",
        description="Ownership attribution, recommendation, and health reporting.",
    )
    parser.add_argument(
        "--store",
        default=os.environ.get(STORE_ENV_VAR, DEFAULT_STORE),
        help=f"event log path (or ${STORE_ENV_VAR}; default {DEFAULT_STORE})",
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    p = sub.add_parser("ingest", help="parse activity logs into the store")
    p.add_argument("--format", required=True, dest="format_tag", metavar="TAG")
    p.add_argument("files", nargs="+")

    p = sub.add_parser("annotations", help="scan asset payload files for ownership directives")
    p.add_argument("files", nargs="+")

    p = sub.add_parser("train", help="train and store a model for one asset type")
    p.add_argument("--asset-type", required=True, type=_asset_type)
    p.add_argument("--model", choices=[learn.KIND_TREE, learn.KIND_SCORING],
                   default=learn.KIND_TREE)
    p.add_argument("--window-days", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("recommend", help="rank owner candidates for an asset")
    p.add_argument("--asset", required=True)
    p.add_argument("--explain", action="store_true")
    p.add_argument("--as-of", type=float, default=None,
                   help="score as of this time (default: just past the newest event)")
    p.add_argument("--issue", action="store_true",
                   help="persist the recommendation so it can be decided")

    p = sub.add_parser("decide", help="record a human decision on a recommendation")
    p.add_argument("--rec", required=True)
    p.add_argument("--candidate", required=True)
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--accept", action="store_true")
    group.add_argument("--reject", action="store_true")
    group.add_argument("--delegate", metavar="CANDIDATE", default=None)
    p.add_argument("--by", default="operator",
                   help="deciding actor (must be an active individual)")

    sub.add_parser("health", help="ownership coverage and staleness report")

    p = sub.add_parser("churn", help="daily asset and owner churn as TSV")
    p.add_argument("--type", required=True, type=_asset_type, dest="asset_type")
    p.add_argument("--from", required=True, type=_day_value, dest="from_day")
    p.add_argument("--to", required=True, type=_day_value, dest="to_day")

    p = sub.add_parser("simulate", help="generate a synthetic world with an answer key")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("evaluate", help="score current models against an answer key")
    p.add_argument("--truth", required=True)
    p.add_argument("--as-of", type=float, default=None)

    p = sub.add_parser("serve", help="run the HTTP API")
    p.add_argument("--bind", default="127.0.0.1:8800")
    p.add_argument("--static", default=None, help="review UI bundle directory")
    p.add_argument("--token", default="dev-token")
    p.add_argument("--actor", default=None,
                   help="actor identity for the default session (enables deciding)")

    return parser


# ----------------------------------------------------------------------
# subcommand bodies
# ----------------------------------------------------------------------


def _cmd_ingest(args) -> int:
    store = _open_store(args.store)
    ingestor = LogIngestor(store)
    for path in args.files:
        events, diagnostics = parse_log_file(path, args.format_tag, ingestor.resolve)
        merged = store.record_interactions(events)
        for diag in diagnostics:
            print(f"{path}:{diag.line_number}: {diag.reason}", file=sys.stderr)
        print(f"{path}: parsed={len(events)} merged={merged} quarantined={len(diagnostics)}")
    return 0


def _cmd_annotations(args) -> int:
    store = _open_store(args.store)
    ingestor = LogIngestor(store)
    # one observation time for the whole batch keeps reruns deterministic
    observed_at = store.max_event_ts
    for path in args.files:
        asset_id = store.asset_by_path.get(path)
        if asset_id is None:
            asset_id = store.asset_by_path.get(os.path.normpath(path))
        if asset_id is None:
            print(f"{path}: no asset registered with this path", file=sys.stderr)
            print(f"{path}: skipped")
            continue
        try:
            with open(path, "r", encoding="utf-8") as fh:
                payload = fh.read()
        except (OSError, UnicodeDecodeError) as exc:
            raise UnreadableFile(f"{path}: {exc}") from exc
        accepted, quarantined = ingestor.ingest_annotation_payload(
            asset_id, payload, source_name=path, at=observed_at
        )
        print(f"{path}: accepted={accepted} quarantined={quarantined}")
    return 0


def _cmd_train(args) -> int:
    store = _open_store(args.store)
    config = learn.TrainConfig(model_kind=args.model, seed=args.seed)
    now = _reference_time(store)
    model = learn.train_for_asset_type(
        store, args.asset_type, now, config, args.window_days
    )
    model_id = learn.store_model(store, model)
    metrics = model.metrics
    print(
        f"model {model_id} kind={model.kind} asset_type={model.asset_type.value}"
        f" schema=v{model.schema_version}"
    )
    print(
        f"examples: train={metrics.get('train_size', 0)}"
        f" test={metrics.get('test_size', 0)}"
    )
    parts = [f"train_accuracy={metrics['train_accuracy']:.4f}",
             f"train_auc={metrics['train_auc']:.4f}"]
    if "test_accuracy" in metrics:
        parts.append(f"test_accuracy={metrics['test_accuracy']:.4f}")
        parts.append(f"test_auc={metrics['test_auc']:.4f}")
    print(" ".join(parts))
    dropped = " ".join(model.dropped_features) if model.dropped_features else "none"
    print(f"dropped: {dropped}")
    return 0


def _cmd_recommend(args) -> int:
    store = _open_store(args.store)
    asset = store.assets.get(args.asset)
    if asset is None:
        raise ValidationError(f"unknown asset {args.asset!r}")
    as_of = args.as_of if args.as_of is not None else _reference_time(store)
    model = learn.current_model(store, asset.asset_type)
    recommendation = recommend_owner(store, args.asset, as_of, model)
    if args.issue:
        rec_id = issue(store, recommendation)
        print(f"recommendation {rec_id}")
    print(
        f"asset {recommendation.asset_id} band={recommendation.band.value}"
        f" model={recommendation.model_id or '-'}"
    )
    for position, entry in enumerate(recommendation.entries, start=1):
        print(f"  {position:3d}. {entry.candidate_id}  score={entry.score:.4f}")
    if args.explain and recommendation.entries:
        top = recommendation.entries[0]
        print(f"explanation for {top.candidate_id}:")
        sys.stdout.write(attribution_to_text(top.attribution))
        for entry in recommendation.entries:
            if entry.counterfactual is not None:
                print(f"nearly recommended: {entry.candidate_id}")
                print(f"  {entry.counterfactual.sentence}")
    return 0


def _cmd_decide(args) -> int:
    store = _open_store(args.store)
    if args.accept:
        decision = Decision.ACCEPT
    elif args.reject:
        decision = Decision.REJECT
    else:
        decision = Decision.DELEGATE
    result = apply_decision(
        store,
        args.rec,
        args.candidate,
        decision,
        decided_by=args.by,
        at=_reference_time(store),
        delegate_to=args.delegate,
    )
    new_owner = result.new_owner if result.new_owner else "-"
    print(
        f"decision {result.decision_id}: {result.decision.value}"
        f" {result.candidate_id} on {result.asset_id} new_owner={new_owner}"
    )
    return 0


def _cmd_health(args) -> int:
    store = _open_store(args.store)
    report = health_report(store, store.max_event_ts)
    print(f"as_of={report.as_of!r} stale_days={report.stale_days}")

    def line(label, bucket):
        print(
            f"{label}: assets={bucket.asset_count} unowned={bucket.unowned_count}"
            f" stale={bucket.stale_owner_count} recommended={bucket.recommended_count}"
            f" inconclusive={bucket.inconclusive_count}"
            f" rate={bucket.inconclusive_rate:.4f}"
        )

    line("all", report)
    for name in sorted(report.per_type):
        line(name, report.per_type[name])
    return 0


def _cmd_churn(args) -> int:
    store = _open_store(args.store)
    series = churn(store, args.asset_type, args.from_day, args.to_day)
    sys.stdout.write(churn_to_tsv(series))
    return 0


def _cmd_simulate(args) -> int:
    try:
        with open(args.config, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except (OSError, ValueError) as exc:
        raise UnreadableFile(f"{args.config}: {exc}") from exc
    config = simulate.SimConfig.from_dict(raw)
    os.makedirs(args.out, exist_ok=True)
    store_path = os.path.join(args.out, "store.events")
    if os.path.exists(store_path) and os.path.getsize(store_path) > 0:
        raise ValidationError(f"{store_path} already exists; refusing to mix worlds")
    # synthetic worlds are cheap to rebuild, skip fsync for speed
    store = _open_store(store_path, fsync=False)
    store, truth = simulate.generate(
        config, store=store, log_dir=os.path.join(args.out, "logs")
    )
    truth_path = os.path.join(args.out, "truth.json")
    with open(truth_path, "w", encoding="utf-8") as fh:
        fh.write(truth.to_json())
    with open(os.path.join(args.out, "config.json"), "w", encoding="utf-8") as fh:
        json.dump(config.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(
        f"world seed={config.seed} events={len(store.log)}"
        f" assets={len(store.assets)} candidates={len(store.candidates)}"
    )
    print(f"store={store_path}")
    print(f"truth={truth_path}")
    return 0


def _cmd_evaluate(args) -> int:
    store = _open_store(args.store)
    try:
        with open(args.truth, "r", encoding="utf-8") as fh:
            truth = simulate.GroundTruth.from_json(fh.read())
    except (OSError, ValueError) as exc:
        raise UnreadableFile(f"{args.truth}: {exc}") from exc
    models = {}
    for type_name in sorted(store.models_current):
        asset_type = AssetType(type_name)
        models[asset_type] = learn.current_model(store, asset_type)
    if not models:
        raise ValidationError("no trained models in the store; run train first")
    as_of = args.as_of if args.as_of is not None else _reference_time(store)
    metrics = simulate.evaluate(store, truth, models, as_of)
    print(
        f"n_assets={metrics['n_assets']}"
        f" top1={metrics['top1']:.4f}"
        f" top3={metrics['top3']:.4f}"
        f" auc={metrics['auc']:.4f}"
        f" inconclusive_rate={metrics['inconclusive_rate']:.4f}"
    )
    return 0


def _cmd_serve(args) -> int:
    host, _, port_text = args.bind.rpartition(":")
    if not host or not port_text.isdigit():
        raise ValidationError(f"--bind expects host:port, got {args.bind!r}")
    store = _open_store(args.store)
    service = Service(store, static_dir=args.static)
    capabilities = (
        ALL_CAPABILITIES if args.actor else frozenset({CAP_READ, CAP_INGEST, CAP_TRAIN})
    )
    service.add_session(args.token, actor_id=args.actor, capabilities=capabilities)
    port = service.start(host, int(port_text))
    print(f"serving on http://{host}:{port}")
    print(f"session token: {args.token}", file=sys.stderr)
    try:
        while True:
            time.sleep(3600)
    except KeyboardInterrupt:
        pass
    finally:
        service.stop()
    return 0


_COMMANDS = {
    "ingest": _cmd_ingest,
    "annotations": _cmd_annotations,
    "train": _cmd_train,
    "recommend": _cmd_recommend,
    "decide": _cmd_decide,
    "health": _cmd_health,
    "churn": _cmd_churn,
    "simulate": _cmd_simulate,
    "evaluate": _cmd_evaluate,
    "serve": _cmd_serve,
}


def main(argv: Optional[list] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors, 0 on --help
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except StewardError as exc:
        print(f"error: {exc.code}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
