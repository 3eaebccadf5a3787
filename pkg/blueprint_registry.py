from __future__ import annotations

from routes.planning import create_blueprint as create_planning_blueprint
from routes.system import create_blueprint as create_system_blueprint


def register_blueprints(app, deps):
    app.register_blueprint(create_system_blueprint({
        "runtime": deps["runtime"],
        "telemetry": deps["telemetry"],
        "version": deps["version"],
        "runtime_config_validation": deps["runtime_config_validation"],
        "config_as_dict": deps["config_as_dict"],
    }))
    app.register_blueprint(create_planning_blueprint({
        "runtime": deps["runtime"],
        "geojson": deps["geojson"],
    }))
