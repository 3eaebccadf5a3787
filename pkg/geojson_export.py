"""GeoJSON maps of routes and of the fused irradiance table.

Colours run from green (irradiance 0, shaded) to red (irradiance 1, sunny).
"""
from __future__ import annotations

import json
import logging

logger = logging.getLogger("score")


def irradiance_color(r):
    r = min(1.0, max(0.0, float(r)))
    return "#{:02x}{:02x}00".format(round(255 * r), round(255 * (1.0 - r)))


def _point(node, properties):
    return {
        "type": "Feature",
        "geometry": {"type": "Point", "coordinates": [node.lon, node.lat]},
        "properties": properties,
    }


def _line(a, b, properties):
    return {
        "type": "Feature",
        "geometry": {"type": "LineString", "coordinates": [[a.lon, a.lat], [b.lon, b.lat]]},
        "properties": properties,
    }


def _node_properties(node, irradiance, **extra):
    props = {"kind": "node", "node_id": node.id, "irradiance": irradiance, "color": irradiance_color(irradiance)}
    if node.label:
        props["label"] = node.label
    props.update(extra)
    return props


def route_feature_collection(plan, network, store):
    """One LineString per route edge plus one Point per route node."""
    snapshot = store.snapshot()
    features = []
    for i, (edge, energy) in enumerate(zip(plan.edges, plan.energy_ledger)):
        props = {
            "kind": "route_edge",
            "seq": i,
            "from_id": edge.from_id,
            "to_id": edge.to_id,
            "length_m": edge.length_m,
            "irradiance": energy.irradiance,
            "net_wh": energy.net_wh,
            "color": irradiance_color(energy.irradiance),
        }
        if plan.edge_weights:
            props["weight"] = plan.edge_weights[i]
        features.append(_line(network.node(edge.from_id), network.node(edge.to_id), props))
    for i, node_id in enumerate(plan.nodes):
        node = network.node(node_id)
        irr = snapshot.node_irradiance(node_id, plan.computed_at)
        features.append(_point(node, _node_properties(node, irr, seq=i)))
    return {
        "type": "FeatureCollection",
        "properties": {
            "route": list(plan.nodes),
            "total_weight": plan.total_weight,
            "computed_at": plan.computed_at,
        },
        "features": features,
    }


def fusion_table_collection(network, store, t_curr):
    """Every node and edge of the network coloured by fused irradiance at ``t_curr``."""
    snapshot = store.snapshot()
    features = []
    for key in sorted(network.edges):
        edge = network.edges[key]
        irr = snapshot.edge_irradiance(edge, t_curr)
        features.append(_line(network.node(edge.from_id), network.node(edge.to_id), {
            "kind": "edge",
            "from_id": edge.from_id,
            "to_id": edge.to_id,
            "irradiance": irr,
            "color": irradiance_color(irr),
        }))
    observations = snapshot.observations
    for node_id in sorted(network.nodes):
        node = network.nodes[node_id]
        obs = observations.get(node_id)
        extra = {"observed_at": obs.t_meas, "source": obs.source} if obs is not None else {}
        features.append(_point(node, _node_properties(node, snapshot.node_irradiance(node_id, t_curr), **extra)))
    return {
        "type": "FeatureCollection",
        "properties": {"t_curr": t_curr, "calibration_factor": snapshot.calibration_factor},
        "features": features,
    }


def write_geojson(collection, path):
    with open(path, "w", encoding="utf-8") as f:
        json.dump(collection, f, indent=2)
    logger.info("GeoJSON written: %s (%s features)", path, len(collection["features"]))
