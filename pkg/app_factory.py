"""
SCORE: solar-aware routing and parking service.

Builds the Flask app around a ScoreRuntime (road network, fusion store and
query settings). The TCP line services share the same runtime.
"""
import logging
import sys
import threading

from flask import Flask, jsonify

import config
import diagnostics
import geojson_export
import telemetry
from blueprint_registry import register_blueprints
from errors import NoPathError, NotOnPlanError, ScoreError, UnknownNodeError
from runtime import build_runtime

VERSION = "1.0.0"

logger = logging.getLogger("score")

_ERROR_STATUS = {UnknownNodeError: 404, NoPathError: 409, NotOnPlanError: 409}


def configure_logging(level=logging.INFO):
    logging.basicConfig(
        level=level,
        format="%(asctime)s %(levelname)s %(message)s",
        stream=sys.stderr,
    )
    logger.setLevel(level)


def error_status(exc):
    for cls, status in _ERROR_STATUS.items():
        if isinstance(exc, cls):
            return status
    return 400


def create_app(runtime):
    app = Flask(__name__)

    @app.errorhandler(ScoreError)
    def handle_score_error(exc):
        return jsonify({"success": False, **exc.as_dict()}), error_status(exc)

    register_blueprints(app, {
        "runtime": runtime,
        "telemetry": telemetry,
        "geojson": geojson_export,
        "version": VERSION,
        "runtime_config_validation": diagnostics.runtime_config_validation,
        "config_as_dict": config.as_dict,
    })
    app.extensions["score_runtime"] = runtime
    return app


_app = None
_app_lock = threading.Lock()


def app_from_environment():
    """App for gunicorn: config comes from SCORE_CONFIG_FILE and SCORE_* variables."""
    global _app
    if _app is not None:
        return _app
    with _app_lock:
        if _app is None:
            cfg = config.validate_config(config.load_config())
            runtime = build_runtime(cfg)
            status = runtime.status()
            logger.info("SCORE %s ready: %s nodes, %s edges", VERSION, status["nodes"], status["edges"])
            _app = create_app(runtime)
    return _app
