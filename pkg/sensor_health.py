"""Per-sensor (callsign) ingest health with degraded/recovered events."""
from __future__ import annotations

import logging
import threading
import time
from collections import OrderedDict

from fusion_store import IngestOutcome

logger = logging.getLogger("score")


class SensorHealthTracker:
    """Tracks sensor reliability and flags a callsign after repeated rejected packets."""

    def __init__(self, telemetry_module, threshold=3, capacity=1024):
        self.telemetry = telemetry_module
        self.threshold = max(1, int(threshold))
        self.capacity = max(1, int(capacity))
        self._lock = threading.Lock()
        self._data = OrderedDict()  # least recently seen first

    def _row(self, callsign):
        row = self._data.get(callsign)
        if row is not None:
            self._data.move_to_end(callsign)
        else:
            row = {
                "accepted": 0,
                "superseded": 0,
                "rejected": 0,
                "reject_streak": 0,
                "degraded": False,
                "last_error": "",
                "last_error_kind": "",
                "last_error_at": 0.0,
                "last_seen_at": 0.0,
                "score": 100.0,
            }
            self._data[callsign] = row
            if len(self._data) > self.capacity:
                evicted, _ = self._data.popitem(last=False)
                logger.debug("Sensor health table full, dropped %s", evicted)
        return row

    def _recompute_score(self, row):
        total = row["accepted"] + row["superseded"] + row["rejected"]
        if total <= 0:
            row["score"] = 100.0
            return
        good = row["accepted"] + row["superseded"]
        streak_penalty = 5 * row["reject_streak"]
        row["score"] = max(0.0, round((good / total) * 100 - streak_penalty, 1))

    def record_ingested(self, callsign, outcome):
        with self._lock:
            row = self._row(callsign)
            if outcome is IngestOutcome.ACCEPTED:
                row["accepted"] += 1
            else:
                row["superseded"] += 1
            row["reject_streak"] = 0
            row["last_seen_at"] = time.time()
            recovered = row["degraded"]
            row["degraded"] = False
            self._recompute_score(row)
        if recovered:
            logger.info("Sensor %s recovered", callsign)
            self.telemetry.emit_event("sensor_recovered", {"callsign": callsign})

    def record_rejected(self, callsign, error):
        degraded = False
        with self._lock:
            row = self._row(callsign)
            row["rejected"] += 1
            row["reject_streak"] += 1
            row["last_error"] = str(error)[:400]
            row["last_error_kind"] = getattr(error, "kind", "error")
            row["last_error_at"] = time.time()
            row["last_seen_at"] = row["last_error_at"]
            if not row["degraded"] and row["reject_streak"] >= self.threshold:
                row["degraded"] = True
                degraded = True
            self._recompute_score(row)
            snapshot = dict(row)
        if degraded:
            logger.warning(
                "Sensor %s degraded after %s rejected packets (last: %s)",
                callsign, snapshot["reject_streak"], snapshot["last_error_kind"],
            )
            self.telemetry.emit_event("sensor_degraded", {
                "callsign": callsign,
                "reject_streak": snapshot["reject_streak"],
                "last_error": snapshot["last_error"],
                "last_error_kind": snapshot["last_error_kind"],
            })
        return snapshot

    def snapshot(self):
        with self._lock:
            return {callsign: dict(row) for callsign, row in self._data.items()}
