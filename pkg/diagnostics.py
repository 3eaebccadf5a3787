"""Configuration and connectivity diagnostics helpers."""
from __future__ import annotations

import math
import os

import requests

from errors import ScoreError

REQUIRED_PATHS = ("network_path", "offline_path")


def path_check(name, path, required=True):
    check = {"name": name, "path": path or "", "exists": False, "readable": False, "ok": False}
    if not path:
        if required:
            check["error"] = "not configured"
        else:
            check["ok"] = True
            check["info"] = "not configured"
        return check
    if not os.path.exists(path):
        check["error"] = "path does not exist"
        return check
    check["exists"] = True
    if os.path.isdir(path):
        check["error"] = "path is a directory"
        return check
    check["readable"] = os.access(path, os.R_OK)
    check["ok"] = check["readable"]
    if not check["ok"]:
        check["error"] = "path not readable"
    return check


def _range_check(name, value, ok, rule):
    check = {"name": name, "value": value, "ok": bool(ok)}
    if not check["ok"]:
        check["error"] = f"{name} must be {rule}, got {value!r}"
    return check


def _finite(value):
    return isinstance(value, (int, float)) and math.isfinite(value)


def range_checks(cfg):
    checks = [
        _range_check("alpha", cfg.alpha, _finite(cfg.alpha) and cfg.alpha >= 0, ">= 0"),
        _range_check("beta", cfg.beta, _finite(cfg.beta) and cfg.beta >= 0, ">= 0"),
        _range_check("alpha+beta", cfg.alpha + cfg.beta, cfg.alpha + cfg.beta > 0, "> 0"),
        _range_check("floor_wh", cfg.floor_wh, _finite(cfg.floor_wh) and cfg.floor_wh > 0, "> 0"),
        _range_check("p_irr", cfg.p_irr, _finite(cfg.p_irr) and cfg.p_irr >= 0, ">= 0"),
        _range_check("p_dist", cfg.p_dist, _finite(cfg.p_dist) and cfg.p_dist >= 0, ">= 0"),
        _range_check("p_irr+p_dist", cfg.p_irr + cfg.p_dist, cfg.p_irr + cfg.p_dist > 0, "> 0"),
        _range_check("epsilon_m", cfg.epsilon_m, _finite(cfg.epsilon_m) and cfg.epsilon_m > 0, "> 0"),
        _range_check(
            "replan_interval_h", cfg.replan_interval_h,
            _finite(cfg.replan_interval_h) and cfg.replan_interval_h > 0, "> 0",
        ),
        _range_check(
            "decay_denominator", cfg.decay_denominator,
            _finite(cfg.decay_denominator) and cfg.decay_denominator > 0, "> 0",
        ),
        _range_check(
            "sensor_degraded_threshold", cfg.sensor_degraded_threshold,
            cfg.sensor_degraded_threshold >= 1, ">= 1",
        ),
        _range_check(
            "max_tracked_sensors", cfg.max_tracked_sensors,
            cfg.max_tracked_sensors >= 1, ">= 1",
        ),
    ]
    for name in ("ingest_port", "query_port", "http_port"):
        port = getattr(cfg, name)
        if port is not None:
            checks.append(_range_check(name, port, 0 <= port <= 65535, "in [0, 65535]"))
    return checks


def runtime_config_validation(cfg, *, load_data=False, required=REQUIRED_PATHS):
    """Report on every configured path and numeric setting.

    With ``load_data`` the data files are also parsed and cross-checked, so a
    malformed record or an offline table missing network nodes shows up here.
    """
    has_inline = {rec.tag for rec in cfg.inline_records}
    need_network = "network_path" in required and "N" not in has_inline
    need_offline = "offline_path" in required and "O" not in has_inline
    checks = {"paths": [], "ranges": range_checks(cfg), "data": None}
    checks["paths"].append(path_check("network_path", cfg.network_path, required=need_network))
    checks["paths"].append(path_check("offline_path", cfg.offline_path, required=need_offline))
    checks["paths"].append(path_check("spec_path", cfg.spec_path, required=False))
    checks["paths"].append(path_check("lots_path", cfg.lots_path, required=False))
    checks["paths"].append(path_check("observations_path", cfg.observations_path, required=False))

    path_errors = [p for p in checks["paths"] if p.get("ok") is False]
    range_errors = [r for r in checks["ranges"] if not r["ok"]]
    if load_data and not path_errors:
        checks["data"] = data_check(cfg, required)
    data_ok = checks["data"] is None or checks["data"]["success"]
    checks["success"] = not path_errors and not range_errors and data_ok
    return checks


def data_check(cfg, required=REQUIRED_PATHS):
    from fusion_store import validate_offline_table
    from runtime import load_data_files

    try:
        network, offline, _spec, lots, observations = load_data_files(
            cfg,
            need_network="network_path" in required,
            need_offline="offline_path" in required,
        )
        if network is not None and offline is not None:
            validate_offline_table(offline, network)
    except ScoreError as e:
        return {"success": False, "error": e.message, "error_class": e.kind}
    return {
        "success": True,
        "nodes": len(network.nodes) if network is not None else 0,
        "edges": len(network.edges) if network is not None else 0,
        "lots": len(lots),
        "observations": len(observations),
    }


def test_score_connection(url, requests_module=requests):
    if not url:
        return {"success": False, "error": "URL required", "error_class": "missing_config"}
    try:
        resp = requests_module.get(f"{url.rstrip('/')}/api/health", timeout=10)
        if resp.status_code == 200:
            body = resp.json()
            return {
                "success": True,
                "message": f"Connected ({body.get('nodes', 0)} nodes, {body.get('edges', 0)} edges)",
                "nodes": body.get("nodes", 0),
                "edges": body.get("edges", 0),
            }
        return {"success": False, "error": f"HTTP {resp.status_code}", "error_class": f"http_{resp.status_code}"}
    except requests_module.Timeout:
        return {"success": False, "error": "Timed out connecting to SCORE service", "error_class": "timeout"}
    except requests_module.ConnectionError:
        return {"success": False, "error": "Connection refused, is the SCORE service running?", "error_class": "unreachable"}
    except Exception as e:
        return {"success": False, "error": str(e), "error_class": "request_error"}
