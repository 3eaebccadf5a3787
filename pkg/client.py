"""HTTP client for a running SCORE service (vehicle side)."""
from __future__ import annotations

import logging
import os
import time

import requests

from routing import shortest_route_on_weights

logger = logging.getLogger("score")

CLIENT_TIMEOUT_SEC = max(1, int(os.getenv("SCORE_CLIENT_TIMEOUT_SEC", "10")))


class ScoreClient:
    """Thin wrapper over the HTTP API. Failed calls return None and set ``last_error``."""

    def __init__(self, base_url, session=None, timeout=CLIENT_TIMEOUT_SEC):
        self.base_url = base_url.rstrip("/")
        self.session = session or requests.Session()
        self.timeout = timeout
        self.last_error = None

    def _set_last_error(self, kind, message, **extra):
        self.last_error = {"kind": kind, "message": message, "ts": time.time(), **extra}

    def _classify_exception(self, exc):
        if isinstance(exc, requests.Timeout):
            return "timeout", "Timed out connecting to SCORE service"
        if isinstance(exc, requests.ConnectionError):
            return "unreachable", "Connection refused/unreachable, is the SCORE service running?"
        return "request_error", str(exc)

    def _request(self, method, path, **kwargs):
        url = f"{self.base_url}{path}"
        try:
            resp = getattr(self.session, method)(url, timeout=self.timeout, **kwargs)
        except Exception as e:
            kind, msg = self._classify_exception(e)
            logger.warning("SCORE %s %s failed: %s", method.upper(), path, e)
            self._set_last_error(kind, msg)
            return None
        if resp.status_code != 200:
            try:
                body = resp.json()
            except ValueError:
                body = {}
            self._set_last_error(
                f"http_{resp.status_code}",
                body.get("error") or f"SCORE {path} returned HTTP {resp.status_code}",
                error_class=body.get("error_class", ""),
            )
            return None
        self.last_error = None
        return resp.json()

    def health(self):
        return self._request("get", "/api/health")

    def route(self, src, dst, t_curr):
        return self._request("get", "/api/route", params={"from": src, "to": dst, "t": t_curr})

    def replan(self, route_nodes, computed_at, current_node, t_curr):
        """Ask the service whether the route being followed should change."""
        params = {
            "route": ",".join(str(n) for n in route_nodes),
            "computed_at": computed_at,
            "at": current_node,
            "t": t_curr,
        }
        return self._request("get", "/api/replan", params=params)

    def park(self, lat, lon, t_curr, p_irr=None, p_dist=None):
        params = {"lat": lat, "lon": lon, "t": t_curr}
        if p_irr is not None:
            params["p_irr"] = p_irr
        if p_dist is not None:
            params["p_dist"] = p_dist
        return self._request("get", "/api/park", params=params)

    def irradiance(self, node_id, t_curr):
        body = self._request("get", "/api/irradiance", params={"node": node_id, "t": t_curr})
        return body["irradiance"] if body is not None else None

    def fetch_matrix(self, t_curr):
        """Per-edge weights as ``{(from_id, to_id): weight}``."""
        body = self._request("get", "/api/matrix", params={"t": t_curr})
        if body is None:
            return None
        return {(e["from_id"], e["to_id"]): float(e["weight"]) for e in body["edges"]}

    def post_observations(self, lines):
        return self._request(
            "post",
            "/api/observations",
            data="\n".join(lines).encode("utf-8"),
            headers={"Content-Type": "text/plain; charset=utf-8"},
        )

    def plan_locally(self, network, src, dst, t_curr):
        """Fetch the weight matrix once and run Dijkstra on the vehicle."""
        weights = self.fetch_matrix(t_curr)
        if weights is None:
            return None
        return shortest_route_on_weights(network, weights, src, dst)
