"""Energy-aware edge weights, Dijkstra routing and periodic replanning."""
from __future__ import annotations

import heapq
import logging
import math
from dataclasses import dataclass

import telemetry
from energy_model import edge_energy, route_energy_totals
from errors import InvalidInputError, NoPathError, NotOnPlanError, UnknownNodeError, ValidationError

logger = logging.getLogger("score")


@dataclass(frozen=True)
class WeightConfig:
    alpha: float = 0.0    # weight per meter
    beta: float = 1.0     # weight per net watt-hour
    floor_wh: float = 0.001

    def __post_init__(self):
        for name in ("alpha", "beta", "floor_wh"):
            value = getattr(self, name)
            if not (isinstance(value, (int, float)) and math.isfinite(value) and value >= 0):
                raise ValidationError(f"{name} must be a finite value >= 0, got {value!r}", subject=name)
        if self.alpha + self.beta <= 0:
            raise ValidationError("alpha + beta must be > 0", subject="alpha")
        if self.floor_wh <= 0:
            raise ValidationError("floor_wh must be > 0", subject="floor_wh")


@dataclass(frozen=True)
class RoutePlan:
    nodes: tuple
    edges: tuple
    total_weight: float
    energy_ledger: tuple
    computed_at: float
    edge_weights: tuple = ()

    @property
    def source(self):
        return self.nodes[0]

    @property
    def destination(self):
        return self.nodes[-1]

    @property
    def total_length_m(self):
        return sum(e.length_m for e in self.edges)

    @property
    def totals(self):
        return route_energy_totals(self.energy_ledger)


def edge_weight(cfg, edge, energy):
    return max(cfg.floor_wh, cfg.alpha * edge.length_m + cfg.beta * energy.net_wh)


def _edge_terms(network, snapshot, spec, cfg, t_curr):
    for key in sorted(network.edges):
        edge = network.edges[key]
        energy = edge_energy(spec, edge, snapshot.edge_irradiance(edge, t_curr))
        yield edge, energy, edge_weight(cfg, edge, energy)


def weight_matrix(network, store, spec, cfg, t_curr):
    """Frozen per-edge weights for one store snapshot at ``t_curr``."""
    snapshot = store.snapshot()
    return {edge.key: weight for edge, _energy, weight in _edge_terms(network, snapshot, spec, cfg, t_curr)}


def shortest_route_on_weights(network, weights, src, dst):
    """Dijkstra with lexicographic tie-break over node sequences.

    Labels are ``(distance, path)`` tuples, so the heap pops the cheapest
    path and, among equal costs, the lexicographically smallest one.
    Returns ``(nodes, total_weight)``.
    """
    for node_id in (src, dst):
        if node_id not in network.nodes:
            raise UnknownNodeError(node_id)
    if src == dst:
        return (src,), 0.0

    best = {src: (0.0, (src,))}
    heap = [(0.0, (src,))]
    settled = set()
    while heap:
        dist, path = heapq.heappop(heap)
        node = path[-1]
        if node in settled:
            continue
        settled.add(node)
        if node == dst:
            return path, dist
        for edge in network.adjacency[node]:
            nxt = edge.to_id
            if nxt in settled:
                continue
            w = weights[edge.key]
            if not (math.isfinite(w) and w > 0):
                raise InvalidInputError(f"edge {edge.from_id}->{edge.to_id} has non-positive weight {w!r}")
            label = (dist + w, path + (nxt,))
            current = best.get(nxt)
            if current is None or label < current:
                best[nxt] = label
                heapq.heappush(heap, label)
    raise NoPathError(src, dst)


def shortest_route(network, store, spec, cfg, src, dst, t_curr):
    snapshot = store.snapshot()
    terms = {edge.key: (edge, energy, weight) for edge, energy, weight in _edge_terms(network, snapshot, spec, cfg, t_curr)}
    weights = {key: term[2] for key, term in terms.items()}
    nodes, total = shortest_route_on_weights(network, weights, src, dst)
    keys = list(zip(nodes, nodes[1:]))
    plan = RoutePlan(
        nodes=tuple(nodes),
        edges=tuple(terms[k][0] for k in keys),
        total_weight=total,
        energy_ledger=tuple(terms[k][1] for k in keys),
        computed_at=t_curr,
        edge_weights=tuple(terms[k][2] for k in keys),
    )
    logger.debug("Route %s -> %s at t=%s: %s (weight %s)", src, dst, t_curr, list(nodes), total)
    return plan


def plan_for_nodes(network, store, spec, cfg, nodes, computed_at):
    """Rebuild a RoutePlan for a node sequence the caller is already following."""
    nodes = tuple(nodes)
    if not nodes:
        raise InvalidInputError("a route needs at least one node")
    for node_id in nodes:
        if node_id not in network.nodes:
            raise UnknownNodeError(node_id)
    snapshot = store.snapshot()
    edges, ledger, weights = [], [], []
    for a, b in zip(nodes, nodes[1:]):
        edge = network.edges.get((a, b))
        if edge is None:
            raise InvalidInputError(f"no road {a}->{b} on the given route")
        energy = edge_energy(spec, edge, snapshot.edge_irradiance(edge, computed_at))
        edges.append(edge)
        ledger.append(energy)
        weights.append(edge_weight(cfg, edge, energy))
    return RoutePlan(
        nodes=nodes,
        edges=tuple(edges),
        total_weight=sum(weights),
        energy_ledger=tuple(ledger),
        computed_at=computed_at,
        edge_weights=tuple(weights),
    )


def replan(plan, network, store, spec, cfg, current_node, t_curr, interval_h):
    """Recompute from ``current_node`` once ``interval_h`` hours have passed."""
    if current_node not in plan.nodes:
        raise NotOnPlanError(f"node {current_node} is not on the current route")
    if not interval_h >= 0:
        raise InvalidInputError(f"interval_h must be >= 0, got {interval_h!r}")
    if t_curr - plan.computed_at < interval_h:
        return plan

    fresh = shortest_route(network, store, spec, cfg, current_node, plan.destination, t_curr)
    tail = plan.nodes[plan.nodes.index(current_node):]
    changed = fresh.nodes != tail
    telemetry.metrics.inc("score_replans_total", changed=str(changed).lower())
    if changed:
        logger.info("Replanned at node %s: %s -> %s", current_node, list(tail), list(fresh.nodes))
        telemetry.emit_event("route_replanned", {
            "from_node": current_node,
            "destination": plan.destination,
            "previous": list(tail),
            "route": list(fresh.nodes),
            "total_weight": fresh.total_weight,
            "t_curr": t_curr,
        })
    return fresh
