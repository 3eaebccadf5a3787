from __future__ import annotations

from flask import Blueprint, Response, jsonify, request


def create_blueprint(ctx):
    bp = Blueprint("system_routes", __name__)
    runtime = ctx["runtime"]

    @bp.route("/api/health")
    def api_health():
        return jsonify({**runtime.status(), "version": ctx["version"]})

    @bp.route("/readyz")
    def readyz():
        deep = request.args.get("deep", "0").lower() in ("1", "true", "yes")
        runtime_diag = ctx["runtime_config_validation"](runtime.cfg, load_data=deep)

        failures = []
        if runtime.network is None:
            failures.append({"component": "network", "error": "no road network loaded"})
        if runtime.store is None:
            failures.append({"component": "fusion_store", "error": "no offline irradiance table loaded"})
        for path_check in runtime_diag.get("paths", []):
            if path_check.get("ok") is False:
                failures.append({
                    "component": "path",
                    "name": path_check.get("name"),
                    "error": path_check.get("error", "path check failed"),
                })
        for range_check in runtime_diag.get("ranges", []):
            if not range_check["ok"]:
                failures.append({"component": "setting", "name": range_check["name"], "error": range_check["error"]})
        data = runtime_diag.get("data")
        if data and not data["success"]:
            failures.append({"component": "data", "error": data.get("error"), "error_class": data.get("error_class")})

        degraded = sorted(name for name, row in runtime.health.snapshot().items() if row.get("degraded"))
        return jsonify({
            "status": "ready" if not failures else "not_ready",
            "deep": deep,
            "checks": {"runtime": runtime_diag},
            "failures": failures,
            "warnings": [{"component": "sensor", "name": name, "error": "degraded"} for name in degraded],
        }), (200 if not failures else 503)

    @bp.route("/metrics")
    def metrics_endpoint():
        telemetry = ctx["telemetry"]
        status = runtime.status()
        gauges = [
            telemetry.Gauge("score_network_nodes", "Nodes in the loaded road network.", status["nodes"]),
            telemetry.Gauge("score_network_edges", "Directed edges in the loaded road network.", status["edges"]),
            telemetry.Gauge("score_observations_held", "Nodes with a live sensor observation.", status["observations"]),
            telemetry.Gauge("score_calibration_factor", "Light-sensor calibration factor.", status["calibration_factor"]),
        ]
        for callsign, health in sorted(runtime.health.snapshot().items()):
            labels = {"callsign": callsign}
            gauges.append(telemetry.Gauge("score_sensor_health_score", "Sensor health score (0-100).", float(health["score"]), labels))
            gauges.append(telemetry.Gauge("score_sensor_degraded", "1 when a sensor is flagged degraded.", int(health["degraded"]), labels))
        return Response(telemetry.metrics.render(gauges), mimetype="text/plain; version=0.0.4")

    @bp.route("/api/validate/config")
    def api_validate_config():
        return jsonify(ctx["runtime_config_validation"](runtime.cfg, load_data=True))

    @bp.route("/api/config")
    def api_config():
        return jsonify(ctx["config_as_dict"](runtime.cfg))

    return bp
