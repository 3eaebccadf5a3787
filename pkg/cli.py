"""``score`` command line: route, park, ingest, serve, export, check.

Exit codes: 0 success, 1 usage error, 2 data or configuration error,
3 no path between the requested nodes.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
import threading

import config
import diagnostics
from errors import ConfigError, ScoreError, UsageError
from fusion_store import dump_observations, hours_from_year_start
from geojson_export import fusion_table_collection, route_feature_collection, write_geojson
from line_service import ingest_server, query_server
from records import fmt_float
from runtime import build_runtime, format_park_answer, format_route_answer

logger = logging.getLogger("score")

# flag dest -> AppConfig field
_OVERRIDES = {
    "net": "network_path",
    "offline": "offline_path",
    "spec": "spec_path",
    "lots": "lots_path",
    "observations": "observations_path",
    "alpha": "alpha",
    "beta": "beta",
    "floor": "floor_wh",
    "p_irr": "p_irr",
    "p_dist": "p_dist",
    "epsilon": "epsilon_m",
    "host": "host",
    "listen": "ingest_port",
    "query_port": "query_port",
    "http_port": "http_port",
}


class ScoreArgumentParser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _common(parser, *flags):
    parser.add_argument("--config", help="key=value config file (default: $SCORE_CONFIG_FILE)")
    for flag in flags:
        if flag in ("alpha", "beta", "floor", "p-irr", "p-dist", "epsilon"):
            parser.add_argument(f"--{flag}", type=float)
        elif flag in ("listen", "query-port", "http-port"):
            parser.add_argument(f"--{flag}", type=int)
        else:
            parser.add_argument(f"--{flag}")


def _time_flags(parser):
    group = parser.add_mutually_exclusive_group(required=True)
    group.add_argument("--time", type=float, help="hours since Jan 1 00:00 UTC")
    group.add_argument("--now", action="store_true", help="use the current UTC time")


def build_parser():
    parser = ScoreArgumentParser(prog="score", description="Solar-aware routing and parking.")
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="store_true")
    verbosity.add_argument("-q", "--quiet", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("route", help="energy-optimal route between two nodes")
    _common(p, "net", "offline", "spec", "observations", "alpha", "beta", "floor")
    p.add_argument("--from", dest="src", type=int, required=True)
    p.add_argument("--to", dest="dst", type=int, required=True)
    _time_flags(p)
    p.add_argument("--geojson", help="write the route as a GeoJSON FeatureCollection")
    p.set_defaults(handler=cmd_route)

    p = sub.add_parser("park", help="rank parking lots near a destination")
    _common(p, "lots", "net", "offline", "observations", "p-irr", "p-dist", "epsilon")
    p.add_argument("--lat", type=float, required=True)
    p.add_argument("--lon", type=float, required=True)
    _time_flags(p)
    p.set_defaults(handler=cmd_park)

    p = sub.add_parser("ingest", help="feed sensor report lines into the fusion store")
    _common(p, "net", "offline", "observations", "host")
    source = p.add_mutually_exclusive_group(required=True)
    source.add_argument("--file", help="read lines from a file ('-' for stdin)")
    source.add_argument("--listen", type=int, help="accept lines on this TCP port")
    p.add_argument("--dump", help="write the resulting observations (B records) here")
    p.set_defaults(handler=cmd_ingest)

    p = sub.add_parser("serve", help="run the ingest, query and HTTP services")
    _common(p, "net", "offline", "spec", "lots", "observations", "host", "listen", "query-port", "http-port")
    p.set_defaults(handler=cmd_serve)

    p = sub.add_parser("export", help="GeoJSON map of fused irradiance over the whole network")
    _common(p, "net", "offline", "observations")
    p.add_argument("--geojson", required=True)
    _time_flags(p)
    p.set_defaults(handler=cmd_export)

    p = sub.add_parser("check", help="validate configuration and data files")
    _common(p)
    p.add_argument("--remote", help="also check a running SCORE HTTP service at this URL")
    p.set_defaults(handler=cmd_check)
    return parser


def _load_config(args, required=None):
    overrides = {field: getattr(args, dest, None) for dest, field in _OVERRIDES.items()}
    return config.validate_config(config.load_config(args.config, overrides), required)


def _resolve_time(args):
    return hours_from_year_start() if args.now else args.time


# -- commands --------------------------------------------------------------

def cmd_route(args):
    cfg = _load_config(args)
    runtime = build_runtime(cfg)
    plan = runtime.route(args.src, args.dst, _resolve_time(args))
    print(format_route_answer(plan))
    print("from\tto\tirradiance\ttravel_s\tconsumed_wh\tharvested_wh\tnet_wh\tweight")
    for energy, weight in zip(plan.energy_ledger, plan.edge_weights):
        print("\t".join([
            str(energy.from_id),
            str(energy.to_id),
            fmt_float(round(energy.irradiance, 4)),
            fmt_float(round(energy.travel_time_s, 1)),
            fmt_float(round(energy.consumed_wh, 3)),
            fmt_float(round(energy.harvested_wh, 3)),
            fmt_float(round(energy.net_wh, 3)),
            fmt_float(round(weight, 6)),
        ]))
    totals = plan.totals
    print(
        f"total\tlength_m={fmt_float(round(plan.total_length_m, 1))}"
        f"\ttravel_s={fmt_float(round(totals.travel_time_s, 1))}"
        f"\tnet_wh={fmt_float(round(totals.net_wh, 3))}"
    )
    if args.geojson:
        write_geojson(route_feature_collection(plan, runtime.network, runtime.store), args.geojson)
    return 0


def cmd_park(args):
    cfg = _load_config(args, required=())
    runtime = build_runtime(cfg, need_network=False, need_offline=False)
    ranked = runtime.park(args.lat, args.lon, _resolve_time(args))
    print(format_park_answer(ranked[0]))
    print("rank\tlot\tnode\tirradiance\tdistance_m\tscore")
    for i, choice in enumerate(ranked, start=1):
        flag = " *" if i == 1 else ""
        print(
            f"{i}\t{choice.lot.id}\t{choice.lot.node_id}\t{fmt_float(round(choice.irradiance_used, 4))}"
            f"\t{fmt_float(round(choice.distance_m, 1))}\t{choice.score!r}{flag}"
        )
    return 0


def _wait_forever(servers, stop=None):
    stop = stop or threading.Event()
    try:
        while not stop.wait(1.0):
            pass
    except KeyboardInterrupt:
        logger.info("Shutting down")
    finally:
        for server in servers:
            server.stop()


def cmd_ingest(args):
    cfg = _load_config(args)
    runtime = build_runtime(cfg)
    if args.listen is not None:
        _wait_forever([ingest_server(runtime, cfg.host, args.listen).start()])
    elif args.file == "-":
        # raw bytes: undecodable input becomes a rejected line, not a crash
        report = runtime.ingest_lines(getattr(sys.stdin, "buffer", sys.stdin))
        print(json.dumps(report.as_dict(), sort_keys=True))
    else:
        try:
            with open(args.file, "r", encoding="utf-8", errors="replace") as f:
                report = runtime.ingest_lines(f)
        except OSError as exc:
            raise ConfigError(f"cannot read {args.file}: {exc}") from None
        print(json.dumps(report.as_dict(), sort_keys=True))
    if args.dump:
        with open(args.dump, "w", encoding="utf-8") as f:
            f.write(dump_observations(runtime.store))
        logger.info("Observations written to %s", args.dump)
    return 0


class _HttpServer:
    def __init__(self, runtime, host, port):
        from werkzeug.serving import make_server

        from app_factory import create_app

        self._server = make_server(host, port, create_app(runtime), threaded=True)
        self._thread = threading.Thread(target=self._server.serve_forever, name="http", daemon=True)

    def start(self):
        self._thread.start()
        logger.info("http service listening on %s:%s", self._server.host, self._server.port)
        return self

    def stop(self):
        self._server.shutdown()


def cmd_serve(args):
    cfg = _load_config(args)
    if cfg.ingest_port is None and cfg.query_port is None and cfg.http_port is None:
        raise UsageError("serve needs at least one of ingest_port, query_port or http_port")
    runtime = build_runtime(cfg)
    servers = []
    try:
        if cfg.ingest_port is not None:
            servers.append(ingest_server(runtime, cfg.host, cfg.ingest_port).start())
        if cfg.query_port is not None:
            servers.append(query_server(runtime, cfg.host, cfg.query_port).start())
        if cfg.http_port is not None:
            servers.append(_HttpServer(runtime, cfg.host, cfg.http_port).start())
    except OSError as exc:
        for server in servers:
            server.stop()
        raise ConfigError(f"cannot listen: {exc}") from None
    _wait_forever(servers)
    return 0


def cmd_export(args):
    cfg = _load_config(args)
    runtime = build_runtime(cfg)
    runtime.require_loaded()
    write_geojson(fusion_table_collection(runtime.network, runtime.store, _resolve_time(args)), args.geojson)
    return 0


def cmd_check(args):
    cfg = config.load_config(args.config)
    report = diagnostics.runtime_config_validation(cfg, load_data=True)
    if args.remote:
        report["remote"] = diagnostics.test_score_connection(args.remote)
        report["success"] = report["success"] and report["remote"]["success"]
    print(json.dumps(report, indent=2, sort_keys=True, default=str))
    return 0 if report["success"] else 2


def _log_level(args):
    if getattr(args, "verbose", False):
        return logging.DEBUG
    if getattr(args, "quiet", False):
        return logging.WARNING
    return logging.INFO


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"error: {exc.message}", file=sys.stderr)
        return exc.exit_code

    logging.basicConfig(
        level=logging.INFO,
        format="%(asctime)s %(levelname)s %(message)s",
        stream=sys.stderr,
    )
    logger.setLevel(_log_level(args))
    try:
        return args.handler(args)
    except ScoreError as exc:
        print(f"error: {exc.message}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
