"""Command line: ``movisim run|sweep|compare``.

Exit codes: 0 success, 1 configuration or input error, 2 internal
invariant breach (a bug).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, replace
from pathlib import Path

from .config import load_scenario
from .errors import ConfigError, ProtocolError
from .metrics import Report, compare, mean
from .sim import Scenario, run

log = logging.getLogger("movisim")

NODE_COLUMNS = [
    "node", "joined_at", "bytes_from_server", "bytes_from_peers", "bytes_uploaded",
    "startup_delay", "stall_count", "stall_total", "completed", "completed_at", "final_playhead",
]
SWEEP_COLUMNS = ["node_count", "seed", "improvement", "mean_startup_delay", "mean_stall_total", "truncated"]


def nodes_csv(report: Report) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=NODE_COLUMNS, lineterminator="\n")
    w.writeheader()
    for rec in report.nodes:
        w.writerow(asdict(rec))
    return buf.getvalue()


def sweep_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=SWEEP_COLUMNS, lineterminator="\n", extrasaction="ignore")
    w.writeheader()
    w.writerows(rows)
    return buf.getvalue()


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
        return
    try:
        Path(out).write_text(text, encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot write output file {out}: {exc.strerror or exc}") from None


def _scenario(args) -> Scenario:
    sc = load_scenario(args.scenario)
    if getattr(args, "seed", None) is not None:
        sc = replace(sc, seed=args.seed)
    return sc


def sweep_row(sc: Scenario) -> dict:
    r = run(sc)
    return {
        "node_count": sc.node_count,
        "seed": sc.seed,
        "improvement": r.improvement if r.improvement is not None else 0.0,
        "mean_startup_delay": r.mean_startup_delay(),
        "mean_stall_total": r.mean_stall_total(),
        "truncated": r.truncated,
    }


def sweep(base: Scenario, counts: list[int], seeds: int, workers: int = 1) -> dict:
    """One run per (count, seed); seeds are ``base.seed + i``. Rows come back
    in (count, seed) order whatever the worker count."""
    if not counts or any(c < 1 for c in counts):
        raise ConfigError("node counts must all be >= 1")
    if seeds < 1:
        raise ConfigError("seeds per point must be >= 1")
    if base.positions is not None or base.waypoints is not None or base.start_offsets is not None:
        raise ConfigError("sweep needs a generated layout: drop explicit positions/waypoints/start_offsets")
    if base.trust_events and max(max(e.evaluator, e.subject) for e in base.trust_events) >= min(counts):
        raise ConfigError("trust_events reference nodes beyond the smallest swept node count")
    points = [replace(base, node_count=c, seed=base.seed + i) for c in counts for i in range(seeds)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(sweep_row, points))
    else:
        rows = [sweep_row(p) for p in points]
    means = []
    for c in counts:
        sel = [r for r in rows if r["node_count"] == c]
        means.append({
            "node_count": c,
            "improvement": mean(r["improvement"] for r in sel),
            "mean_startup_delay": mean(r["mean_startup_delay"] for r in sel if r["mean_startup_delay"] is not None),
            "mean_stall_total": mean(r["mean_stall_total"] for r in sel),
        })
    return {"rows": rows, "means": means}


def compare_modes(sc: Scenario) -> dict:
    base = run(replace(sc, mode="server-only"))
    p2p = run(replace(sc, mode="p2p"))
    out = compare(base, p2p)
    out["a"]["config"] = base.config
    out["b"]["config"] = p2p.config
    return out


def cmd_run(args) -> int:
    report = run(_scenario(args))
    text = nodes_csv(report) if args.format == "csv" else report.to_json()
    _emit(text, args.out)
    log.info("improvement %s, server %d B, peers %d B", report.improvement, report.server_bytes, report.peer_bytes)
    return 0


def cmd_sweep(args) -> int:
    try:
        counts = [int(x) for x in args.nodes.split(",") if x.strip()]
    except ValueError:
        raise ConfigError(f"--nodes must be a comma-separated list of integers, got {args.nodes!r}") from None
    result = sweep(_scenario(args), counts, args.seeds, args.workers)
    text = sweep_csv(result["rows"]) if args.format == "csv" else json.dumps(result, sort_keys=True, indent=1)
    _emit(text, args.out)
    return 0


def cmd_compare(args) -> int:
    result = compare_modes(_scenario(args))
    _emit(json.dumps(result, sort_keys=True, indent=1), args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="movisim", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run one scenario and write its report")
    r.add_argument("--scenario", required=True)
    r.add_argument("--seed", type=int)
    r.add_argument("--out")
    r.add_argument("--format", choices=("json", "csv"), default="json")
    r.set_defaults(func=cmd_run)

    s = sub.add_parser("sweep", help="improvement versus node count")
    s.add_argument("--scenario", required=True)
    s.add_argument("--nodes", default="1,5,10,20,30")
    s.add_argument("--seeds", type=int, default=5)
    s.add_argument("--seed", type=int, help="base seed (default: the scenario's)")
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--out")
    s.add_argument("--format", choices=("json", "csv"), default="json")
    s.set_defaults(func=cmd_sweep)

    c = sub.add_parser("compare", help="3G-only versus P2P on the same scenario")
    c.add_argument("--scenario", required=True)
    c.add_argument("--seed", type=int)
    c.add_argument("--out")
    c.set_defaults(func=cmd_compare)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ProtocolError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
