from __future__ import annotations

import math

from flask import Blueprint, jsonify, request

from errors import UsageError


def _arg(name, kind, default=None, required=True):
    raw = request.args.get(name, "").strip()
    if not raw:
        if required and default is None:
            raise UsageError(f"missing query parameter {name!r}")
        return default
    try:
        value = kind(raw)
    except ValueError:
        raise UsageError(f"query parameter {name!r} must be {kind.__name__}, got {raw!r}") from None
    if isinstance(value, float) and not math.isfinite(value):
        raise UsageError(f"query parameter {name!r} must be finite")
    return value


def plan_as_dict(plan):
    totals = plan.totals
    return {
        "nodes": list(plan.nodes),
        "total_weight": plan.total_weight,
        "computed_at": plan.computed_at,
        "total_length_m": plan.total_length_m,
        "travel_time_s": totals.travel_time_s,
        "consumed_wh": totals.consumed_wh,
        "harvested_wh": totals.harvested_wh,
        "net_wh": totals.net_wh,
        "edges": [
            {
                "from_id": energy.from_id,
                "to_id": energy.to_id,
                "irradiance": energy.irradiance,
                "travel_time_s": energy.travel_time_s,
                "consumed_wh": energy.consumed_wh,
                "harvested_wh": energy.harvested_wh,
                "net_wh": energy.net_wh,
                "weight": weight,
            }
            for energy, weight in zip(plan.energy_ledger, plan.edge_weights)
        ],
    }


def choice_as_dict(choice):
    return {
        "lot_id": choice.lot.id,
        "node_id": choice.lot.node_id,
        "lat": choice.lot.lat,
        "lon": choice.lot.lon,
        "score": choice.score,
        "irradiance_used": choice.irradiance_used,
        "distance_m": choice.distance_m,
    }


def create_blueprint(ctx):
    bp = Blueprint("planning_routes", __name__)
    runtime = ctx["runtime"]
    geojson = ctx["geojson"]

    def _time():
        return _arg("t", float, default=runtime.now(), required=False)

    @bp.route("/api/route")
    def api_route():
        plan = runtime.route(_arg("from", int), _arg("to", int), _time())
        if request.args.get("format") == "geojson":
            return jsonify(geojson.route_feature_collection(plan, runtime.network, runtime.store))
        return jsonify(plan_as_dict(plan))

    @bp.route("/api/replan")
    def api_replan():
        raw = _arg("route", str)
        try:
            route_nodes = [int(part) for part in raw.split(",") if part.strip()]
        except ValueError:
            raise UsageError(f"route must be comma separated node ids, got {raw!r}") from None
        computed_at = _arg("computed_at", float)
        plan = runtime.replan(route_nodes, computed_at, _arg("at", int), _time())
        return jsonify({**plan_as_dict(plan), "recomputed": plan.computed_at != computed_at})

    @bp.route("/api/park")
    def api_park():
        ranked = runtime.park(
            _arg("lat", float),
            _arg("lon", float),
            _time(),
            p_irr=_arg("p_irr", float, required=False),
            p_dist=_arg("p_dist", float, required=False),
        )
        return jsonify({"choice": choice_as_dict(ranked[0]), "ranked": [choice_as_dict(c) for c in ranked]})

    @bp.route("/api/irradiance")
    def api_irradiance():
        node_id, t_curr = _arg("node", int), _time()
        return jsonify({"node_id": node_id, "t": t_curr, "irradiance": runtime.irradiance(node_id, t_curr)})

    @bp.route("/api/matrix")
    def api_matrix():
        t_curr = _time()
        weights = runtime.matrix(t_curr)
        return jsonify({
            "t": t_curr,
            "edges": [{"from_id": a, "to_id": b, "weight": w} for (a, b), w in sorted(weights.items())],
        })

    @bp.route("/api/fusion-table")
    def api_fusion_table():
        runtime.require_loaded()
        return jsonify(geojson.fusion_table_collection(runtime.network, runtime.store, _time()))

    @bp.route("/api/observations", methods=["POST"])
    def api_observations():
        body = request.get_data(as_text=True) or ""
        report = runtime.ingest_lines(body.splitlines())
        return jsonify(report.as_dict())

    @bp.route("/api/sensors")
    def api_sensors():
        return jsonify({"sensors": runtime.health.snapshot()})

    return bp
