"""Counters, gauges and webhook events for SCORE.

Counters live in one process-wide registry rendered as Prometheus text at
``/metrics``. Events are POSTed to every URL in ``SCORE_WEBHOOK_URLS`` from a
daemon thread; delivery failures are counted and logged, never raised.
"""
from __future__ import annotations

import hashlib
import hmac
import json
import logging
import os
import re
import socket
import threading
import time
from collections import Counter
from dataclasses import dataclass, field
from itertools import groupby
from typing import Iterable

import requests

logger = logging.getLogger("score")

COUNTER_HELP = {
    "score_observations_total": "Sensor observations by ingest result.",
    "score_packets_rejected_total": "Sensor lines rejected by the packet grammar, by error kind.",
    "score_queries_total": "Route/park/irradiance/calibrate queries by result.",
    "score_replans_total": "Periodic route recomputations, by whether the route changed.",
    "score_calibrations_total": "Light-sensor calibration attempts.",
    "score_webhooks_total": "Webhook deliveries by result.",
    "score_webhook_events_total": "Events emitted.",
}

LabelKey = tuple[tuple[str, str], ...]


def _label_key(labels) -> LabelKey:
    return tuple(sorted((k, str(v)) for k, v in labels.items()))


def _escape(value: str) -> str:
    return str(value).replace("\\", "\\\\").replace("\n", "\\n").replace('"', '\\"')


def _sample(name: str, labels: LabelKey, value) -> str:
    if not labels:
        return f"{name} {value}"
    return name + "{" + ",".join(f'{k}="{_escape(v)}"' for k, v in labels) + "} " + str(value)


@dataclass(frozen=True)
class Gauge:
    """A point-in-time value computed by the caller at scrape time."""

    name: str
    help: str
    value: float
    labels: dict = field(default_factory=dict)


class Metrics:
    """Thread-safe labelled counters."""

    def __init__(self):
        self._lock = threading.Lock()
        self._counters: Counter = Counter()

    def inc(self, name: str, amount: float = 1.0, **labels):
        with self._lock:
            self._counters[(name, _label_key(labels))] += float(amount)

    def value(self, name: str, **labels) -> float:
        with self._lock:
            return self._counters.get((name, _label_key(labels)), 0.0)

    def total(self, name: str) -> float:
        """Sum of a counter over all of its label sets."""
        with self._lock:
            return sum(v for (n, _), v in self._counters.items() if n == name)

    def snapshot(self):
        with self._lock:
            return dict(self._counters)

    def render(self, gauges: Iterable[Gauge] = ()) -> str:
        lines = []
        counters = sorted(self.snapshot().items())
        for name, rows in groupby(counters, key=lambda item: item[0][0]):
            lines.append(f"# HELP {name} {COUNTER_HELP.get(name, name)}")
            lines.append(f"# TYPE {name} counter")
            lines.extend(_sample(name, labels, value) for (_, labels), value in rows)
        for name, rows in groupby(sorted(gauges, key=lambda g: g.name), key=lambda g: g.name):
            rows = list(rows)
            lines.append(f"# HELP {name} {rows[0].help}")
            lines.append(f"# TYPE {name} gauge")
            lines.extend(_sample(name, _label_key(g.labels), g.value) for g in rows)
        return "\n".join(lines) + "\n"


metrics = Metrics()


# -- webhooks ---------------------------------------------------------------

def _webhook_urls():
    """``SCORE_WEBHOOK_URLS``, comma or newline separated."""
    raw = os.getenv("SCORE_WEBHOOK_URLS", "")
    return [url.strip() for url in re.split(r"[,\n]", raw) if url.strip()]


def sign_body(body: bytes, secret: str) -> str:
    return "sha256=" + hmac.new(secret.encode("utf-8"), body, hashlib.sha256).hexdigest()


def emit_event(event_type: str, payload=None):
    """Queue one event for every configured webhook; returns immediately."""
    event = {"ts": time.time(), "host": socket.gethostname(), **dict(payload or {}), "event": event_type}
    metrics.inc("score_webhook_events_total", event=event_type)

    urls = _webhook_urls()
    if not urls:
        metrics.inc("score_webhooks_total", result="skipped", event=event_type)
        return
    threading.Thread(
        target=_post_event,
        args=(event_type, event, urls),
        name=f"webhook-{event_type}",
        daemon=True,
    ).start()


def _post_event(event_type: str, payload: dict, urls):
    timeout = float(os.getenv("SCORE_WEBHOOK_TIMEOUT_SEC", "5"))
    secret = os.getenv("SCORE_WEBHOOK_SECRET", "")
    body = json.dumps(payload, sort_keys=True).encode("utf-8")
    headers = {"Content-Type": "application/json", "User-Agent": "SCORE/telemetry"}
    if secret:
        headers["X-Score-Signature"] = sign_body(body, secret)
    for url in urls:
        try:
            resp = requests.post(url, data=body, headers=headers, timeout=timeout)
        except Exception as exc:  # pragma: no cover - network failure path
            metrics.inc("score_webhooks_total", result="error", event=event_type)
            logger.warning("Webhook %s for %s failed: %s", url, event_type, exc)
            continue
        metrics.inc("score_webhooks_total", result="sent", event=event_type, code=f"{resp.status_code // 100}xx")
        if resp.status_code >= 400:
            logger.warning("Webhook %s for %s returned HTTP %s", url, event_type, resp.status_code)
