"""Command line interface.

`serve` runs a repository node; everything else is a thin client of a running
node's HTTP API, except `simulate`, which runs the deterministic sync
simulator locally.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import httpx


def _client(args) -> httpx.Client:
    headers = {}
    if getattr(args, "token", None):
        headers["Authorization"] = f"Bearer {args.token}"
    return httpx.Client(base_url=args.server.rstrip("/"), headers=headers, timeout=30.0)


def cmd_serve(args) -> int:
    import uvicorn

    from .app import create_app
    from .config import load_config
    from .repository import RepositoryNode
    from .syncdaemon import HttpPeer, SyncDaemon

    config = load_config(args.config)
    repo = RepositoryNode(config)
    app = create_app(repo)
    if config.peers:
        peers = [HttpPeer(p.url, p.token or config.peer_token) for p in config.peers]
        SyncDaemon(repo, peers, config.sync_interval_s).start()
    uvicorn.run(app, host=config.listen_host, port=config.listen_port, log_level="info")
    return 0


def cmd_ingest(args) -> int:
    failures = 0
    with _client(args) as client:
        for path in args.files:
            content = Path(path).read_bytes()
            resp = client.post(f"/v1/campaigns/{args.campaign}/uploads", content=content)
            if resp.status_code != 200:
                print(f"{path}: HTTP {resp.status_code} {resp.text}", file=sys.stderr)
                failures += 1
                continue
            report = resp.json()
            print(
                f"{path}: accepted {report['accepted']}, duplicates {report['duplicates']}, "
                f"errors {len(report['errors'])}"
            )
            for err in report["errors"]:
                print(f"  line {err['line']}: {err['reason']} {err['detail']}", file=sys.stderr)
    return 1 if failures else 0


def cmd_occupancy(args) -> int:
    params = {"bbox": args.bbox, "cell_deg": args.cell_deg, "plan": args.plan}
    if args.threshold_dbm is not None:
        params["threshold_dbm"] = args.threshold_dbm
    if args.campaign:
        params["campaign"] = args.campaign
    with _client(args) as client:
        resp = client.get("/v1/occupancy", params=params)
    if resp.status_code != 200:
        print(f"HTTP {resp.status_code}: {resp.text}", file=sys.stderr)
        return 1
    out = json.dumps(resp.json(), indent=2)
    if args.out:
        Path(args.out).write_text(out + "\n", encoding="utf-8")
    else:
        print(out)
    return 0


def cmd_whitespaces(args) -> int:
    params = {"plan": args.plan, "format": args.format}
    if args.region:
        params["region"] = args.region
    elif args.bbox:
        params["bbox"] = args.bbox
    else:
        print("either --region or --bbox is required", file=sys.stderr)
        return 2
    for name in ("threshold_dbm", "max_duty", "min_samples", "campaign"):
        value = getattr(args, name)
        if value is not None:
            params[name] = value
    with _client(args) as client:
        resp = client.get("/v1/whitespaces", params=params)
    if resp.status_code != 200:
        print(f"HTTP {resp.status_code}: {resp.text}", file=sys.stderr)
        return 1
    print(resp.text if args.format == "table" else json.dumps(resp.json(), indent=2))
    return 0


def cmd_export(args) -> int:
    with _client(args) as client:
        if args.format == "zrf":
            params = {"format": "zrf"}
            if args.campaign:
                params["campaign"] = args.campaign
            resp = client.get("/v1/export", params=params)
            payload = resp.text
        else:
            if not args.bbox:
                print("--bbox is required for geojson export", file=sys.stderr)
                return 2
            params = {"bbox": args.bbox, "cell_deg": args.cell_deg, "plan": args.plan}
            if args.campaign:
                params["campaign"] = args.campaign
            resp = client.get("/v1/occupancy", params=params)
            payload = json.dumps(resp.json(), indent=2) if resp.status_code == 200 else resp.text
    if resp.status_code != 200:
        print(f"HTTP {resp.status_code}: {payload}", file=sys.stderr)
        return 1
    if args.out:
        Path(args.out).write_text(payload, encoding="utf-8")
    else:
        print(payload, end="" if payload.endswith("\n") else "\n")
    return 0


def cmd_simulate(args) -> int:
    from .sim import parse_scenario, run_simulation

    scenario = parse_scenario(Path(args.scenario).read_text(encoding="utf-8"))
    trace = run_simulation(scenario)
    text = trace.text()
    if args.trace:
        Path(args.trace).write_text(text, encoding="utf-8")
        print(trace.summary_row())
    else:
        print(text, end="")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rfrepo", description="spectrum repository tools")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("serve", help="run a repository node")
    p.add_argument("--config", required=True, help="node config JSON")
    p.set_defaults(func=cmd_serve)

    common_client = argparse.ArgumentParser(add_help=False)
    common_client.add_argument("--server", default="http://127.0.0.1:8080")
    common_client.add_argument("--token", default=None)

    p = sub.add_parser("ingest", parents=[common_client], help="upload device files")
    p.add_argument("files", nargs="+")
    p.add_argument("--campaign", required=True)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("occupancy", parents=[common_client], help="occupancy grid as GeoJSON")
    p.add_argument("--bbox", required=True, help="min_lon,min_lat,max_lon,max_lat")
    p.add_argument("--cell-deg", dest="cell_deg", type=float, default=0.01)
    p.add_argument("--plan", default="UHF-8MHz")
    p.add_argument("--threshold-dbm", dest="threshold_dbm", type=float, default=None)
    p.add_argument("--campaign", default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_occupancy)

    p = sub.add_parser("whitespaces", parents=[common_client], help="white-space report")
    p.add_argument("--region", default=None, help="lat:lon;lat:lon;... closed ring")
    p.add_argument("--bbox", default=None)
    p.add_argument("--plan", default="UHF-8MHz")
    p.add_argument("--threshold-dbm", dest="threshold_dbm", type=float, default=None)
    p.add_argument("--max-duty", dest="max_duty", type=float, default=None)
    p.add_argument("--min-samples", dest="min_samples", type=int, default=None)
    p.add_argument("--campaign", default=None)
    p.add_argument("--format", choices=("table", "json"), default="table")
    p.set_defaults(func=cmd_whitespaces)

    p = sub.add_parser("export", parents=[common_client], help="export records or grids")
    p.add_argument("--format", choices=("zrf", "geojson"), default="zrf")
    p.add_argument("--campaign", default=None)
    p.add_argument("--bbox", default=None)
    p.add_argument("--cell-deg", dest="cell_deg", type=float, default=0.01)
    p.add_argument("--plan", default="UHF-8MHz")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("simulate", help="run a sync scenario locally")
    p.add_argument("scenario")
    p.add_argument("--trace", default=None, help="write the full trace here")
    p.set_defaults(func=cmd_simulate)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
