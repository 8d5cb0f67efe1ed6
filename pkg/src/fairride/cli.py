"""Command-line pipeline: simulate, validate, report, serve, compare.

Exit codes are a stable contract: 0 success, 2 usage errors (argparse),
3 input/validation errors, 4 runtime aborts (policy infeasibility, dirty
logs). An optional YAML config file can carry any long flag; explicit flags
override the file.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import yaml

from . import api_service, metrics
from .demand import generate_synthetic, load_requests
from .errors import InputError, PolicyValidationError, RunLogError
from .matching import Constraints, RewardPlusDelayPolicy, make_policy
from .road_network import load_network, load_zones
from .runlog import file_digest, open_runlog
from .simulator import SimConfig, run_to_file, validate_runlog

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INPUT = 3
EXIT_RUNTIME = 4


def _add_network_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--nodes", required=True, help="nodes CSV (node_id,lat,lon)")
    p.add_argument("--edges", required=True, help="edges CSV (from,to,cost_seconds)")
    p.add_argument("--zones", required=True, help="zones CSV (node_id,zone_id,zone_name)")


def _add_sim_args(p: argparse.ArgumentParser) -> None:
    _add_network_args(p)
    demand = p.add_mutually_exclusive_group(required=True)
    demand.add_argument("--requests", help="requests CSV to replay")
    demand.add_argument("--synthetic", action="store_true",
                        help="generate Poisson demand instead of reading a file")
    p.add_argument("--rate", type=float, default=10.0,
                   help="synthetic demand: expected arrivals per epoch")
    p.add_argument("--dump-requests", help="write the synthetic demand to this CSV")
    p.add_argument("--n-taxis", type=int, default=1000)
    p.add_argument("--horizon", type=int, default=1440, help="epochs in the run")
    p.add_argument("--epoch-length", type=int, default=60, help="seconds per epoch")
    p.add_argument("--capacity", type=int, default=4)
    p.add_argument("--max-pickup-delay", type=int, default=300, help="seconds")
    p.add_argument("--max-detour-delay", type=int, default=600, help="seconds")
    p.add_argument("--max-group-size", type=int, default=3,
                   help="candidate group size cap for the rpd policy")
    p.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fairride",
                                     description="ride-sharing simulation and "
                                                 "fairness analytics")
    parser.add_argument("--config", help="YAML file of long option defaults")
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="run one policy over one day of demand")
    _add_sim_args(p_sim)
    p_sim.add_argument("--policy", choices=sorted(("rpd", "greedy")), default="rpd")
    p_sim.add_argument("--out", required=True, help="output run log path")

    p_rep = sub.add_parser("report", help="emit the fairride-report/1 document for a run")
    _add_network_args(p_rep)
    p_rep.add_argument("--runlog", required=True)
    p_rep.add_argument("--out", help="report path (default: stdout)")

    p_val = sub.add_parser("validate", help="replay a run log and report violations")
    p_val.add_argument("--runlog", required=True)
    p_val.add_argument("--nodes", help="nodes CSV for position/direct-time checks")
    p_val.add_argument("--edges", help="edges CSV for position/direct-time checks")

    p_srv = sub.add_parser("serve", help="serve registered runs over HTTP")
    _add_network_args(p_srv)
    p_srv.add_argument("--runs", nargs="+", required=True, help="run log paths")
    p_srv.add_argument("--port", type=int, default=8000)
    p_srv.add_argument("--host", default="127.0.0.1")
    p_srv.add_argument("--ui", help="directory with the built frontend, mounted at /ui")

    p_cmp = sub.add_parser("compare",
                           help="run rpd and greedy on identical inputs, emit both "
                                "logs plus a joined report")
    _add_sim_args(p_cmp)
    p_cmp.add_argument("--out-dir", required=True)
    return parser


def _apply_config_file(parser: argparse.ArgumentParser, argv: list[str]) -> list[str]:
    """Seed subparser defaults from --config; explicit flags still win."""
    probe = argparse.ArgumentParser(add_help=False)
    probe.add_argument("--config")
    known, _ = probe.parse_known_args(argv)
    if not known.config:
        return argv
    with open(known.config, "r", encoding="utf-8") as fh:
        loaded = yaml.safe_load(fh) or {}
    if not isinstance(loaded, dict):
        raise InputError(f"config file {known.config} must be a mapping")
    defaults = {str(k).replace("-", "_"): v for k, v in loaded.items()}
    for group_action in parser._subparsers._group_actions:  # noqa: SLF001 - argparse has no public hook
        for sub in group_action.choices.values():
            for action in sub._actions:
                if action.dest in defaults:
                    action.default = defaults[action.dest]
                    action.required = False
    return argv


def _load_context(args):
    net = load_network(args.nodes, args.edges)
    partition = load_zones(net, args.zones)
    return net, partition


def _build_demand(args, net, partition, horizon):
    if args.requests:
        return load_requests(args.requests, net)
    stream = generate_synthetic(net, partition, horizon, [args.rate] * horizon,
                                seed=args.seed)
    if args.dump_requests:
        with open(args.dump_requests, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("request_id,pickup_node,dropoff_node,arrival_epoch,fare\n")
            for r in stream:
                fh.write(f"{r.request_id},{r.pickup},{r.dropoff},{r.arrival_epoch},{r.fare}\n")
    return stream


def _sim_config(args, policy_name: str) -> SimConfig:
    constraints = Constraints(capacity=args.capacity,
                              max_pickup_delay_s=args.max_pickup_delay,
                              max_detour_delay_s=args.max_detour_delay,
                              epoch_length_s=args.epoch_length)
    return SimConfig(horizon_epochs=args.horizon, n_taxis=args.n_taxis,
                     constraints=constraints, policy=policy_name, seed=args.seed,
                     network_digest=file_digest(args.nodes) + ":" + file_digest(args.edges),
                     zones_digest=file_digest(args.zones))


def _make_policy(name: str, args):
    if name == "rpd":
        return RewardPlusDelayPolicy(max_group_size=args.max_group_size)
    return make_policy(name)


def _summary_line(out_path, partition) -> str:
    log = open_runlog(out_path)
    table = metrics.build_request_table(log)
    matched = sum(1 for r in table.values() if r.matched)
    unmatched = sum(1 for r in table.values() if r.unmatched_epoch is not None)
    pending = len(table) - matched - unmatched
    z = metrics.zonal_fairness(log, partition)
    z_text = "undefined" if z is None else f"{z:.4f}"
    return (f"requests={len(table)} matched={matched} unmatched={unmatched} "
            f"pending={pending} zonal_fairness={z_text}")


def cmd_simulate(args) -> int:
    net, partition = _load_context(args)
    demand = _build_demand(args, net, partition, args.horizon)
    config = _sim_config(args, args.policy)
    run_to_file(config, net, partition, demand, args.out,
                policy=_make_policy(args.policy, args))
    print(_summary_line(args.out, partition))
    return EXIT_OK


def cmd_report(args) -> int:
    net, partition = _load_context(args)
    log = open_runlog(args.runlog)
    body = metrics.render_report(metrics.numeric_dashboard(log, partition))
    if args.out:
        Path(args.out).write_text(body, encoding="utf-8")
    else:
        sys.stdout.write(body)
    return EXIT_OK


def cmd_validate(args) -> int:
    net = None
    if args.nodes and args.edges:
        net = load_network(args.nodes, args.edges)
    report = validate_runlog(open_runlog(args.runlog), net)
    if report.ok:
        print(f"clean: {report.events_checked} events, 0 violations")
        return EXIT_OK
    for v in report.violations[:50]:
        print(f"{v.kind}: {v.message}")
    print(f"dirty: {len(report.violations)} violations "
          f"({', '.join(f'{k}={n}' for k, n in sorted(report.by_kind().items()))})")
    return EXIT_RUNTIME


def cmd_serve(args) -> int:
    net, partition = _load_context(args)
    registry = api_service.RunRegistry(
        net, partition,
        network_digest=file_digest(args.nodes) + ":" + file_digest(args.edges),
        zones_digest=file_digest(args.zones))
    for path in args.runs:
        run_id = Path(path).stem
        data = registry.register(run_id, path)
        note = " (digest mismatch)" if data.digest_mismatch else ""
        print(f"registered {run_id}: policy={data.header.policy} "
              f"seed={data.header.seed}{note}")
    api_service.serve(registry, host=args.host, port=args.port, ui_dir=args.ui)
    return EXIT_OK


def cmd_compare(args) -> int:
    net, partition = _load_context(args)
    demand = _build_demand(args, net, partition, args.horizon)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    reports = {}
    for name in ("rpd", "greedy"):
        out = out_dir / f"{name}.fairlog"
        config = _sim_config(args, name)
        run_to_file(config, net, partition, demand, out, policy=_make_policy(name, args))
        print(f"{name}: {_summary_line(out, partition)}")
        reports[name] = metrics.numeric_dashboard(open_runlog(out), partition)
    joined = {"format": "fairride-compare/1", "runs": reports}
    report_path = out_dir / "compare.json"
    report_path.write_text(json.dumps(joined, sort_keys=True, indent=2) + "\n",
                           encoding="utf-8")
    print(f"wrote {report_path}")
    return EXIT_OK


_COMMANDS = {
    "simulate": cmd_simulate,
    "report": cmd_report,
    "validate": cmd_validate,
    "serve": cmd_serve,
    "compare": cmd_compare,
}


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        argv = _apply_config_file(parser, argv)
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except (InputError, RunLogError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except FileNotFoundError as exc:
        print(f"error: missing input file: {exc.filename}", file=sys.stderr)
        return EXIT_INPUT
    except PolicyValidationError as exc:
        print(f"error: infeasible assignment: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
