import logging
import os
from dataclasses import dataclass, field, fields, replace

from errors import ConfigError
from records import RECORD_TAGS, iter_records, strip_comment

# =============================================================================
# SCORE Configuration
# Priority: command-line flags > environment variables > config file > defaults
# =============================================================================

CONFIG_FILE_ENV = "SCORE_CONFIG_FILE"
ENV_PREFIX = "SCORE_"

logger = logging.getLogger("score")


@dataclass(frozen=True)
class AppConfig:
    # Data files
    network_path: str = ""
    offline_path: str = ""
    spec_path: str = ""
    lots_path: str = ""
    observations_path: str = ""

    # Routing weights
    alpha: float = 0.0
    beta: float = 1.0
    floor_wh: float = 0.001

    # Parking preference
    p_irr: float = 1.0
    p_dist: float = 1.0
    epsilon_m: float = 1.0

    # Fusion and replanning
    replan_interval_h: float = 0.25
    decay_denominator: float = 100000.0
    sensor_degraded_threshold: int = 3
    max_tracked_sensors: int = 1024

    # Service
    host: str = "127.0.0.1"
    ingest_port: int | None = None
    query_port: int | None = None
    http_port: int | None = None

    # N/E/P/O/V/B records written directly in the config file
    inline_records: tuple = field(default=(), repr=False)
    source_path: str = ""

    def records(self, *tags):
        return [rec for rec in self.inline_records if rec.tag in tags]


_PATH_KEYS = ("network_path", "offline_path", "spec_path", "lots_path", "observations_path")
_FIELD_TYPES = {
    "network_path": str,
    "offline_path": str,
    "spec_path": str,
    "lots_path": str,
    "observations_path": str,
    "alpha": float,
    "beta": float,
    "floor_wh": float,
    "p_irr": float,
    "p_dist": float,
    "epsilon_m": float,
    "replan_interval_h": float,
    "decay_denominator": float,
    "sensor_degraded_threshold": int,
    "max_tracked_sensors": int,
    "host": str,
    "ingest_port": int,
    "query_port": int,
    "http_port": int,
}
SETTING_KEYS = tuple(_FIELD_TYPES)


def _convert(key, raw, where):
    kind = _FIELD_TYPES[key]
    if kind is str:
        return raw
    if raw == "" and key.endswith("_port"):
        return None
    try:
        return kind(raw)
    except ValueError:
        raise ConfigError(f"{where}: {key} expects {kind.__name__}, got {raw!r}") from None


def parse_config_text(text, *, path=""):
    """Split a config file into settings and inline records."""
    settings = {}
    record_lines = []
    base_dir = os.path.dirname(os.path.abspath(path)) if path else ""
    for line_no, raw in enumerate(text.splitlines(), start=1):
        stripped = strip_comment(raw)
        if not stripped:
            continue
        where = f"{path or '<config>'}:{line_no}"
        if stripped.split()[0] in RECORD_TAGS:
            record_lines.append((line_no, raw))
            continue
        key, sep, value = stripped.partition("=")
        key = key.strip()
        if not sep:
            raise ConfigError(f"{where}: expected key=value or a record line, got {stripped!r}")
        if key not in _FIELD_TYPES:
            raise ConfigError(f"{where}: unknown setting {key!r}")
        value = value.strip()
        if key in _PATH_KEYS and value and base_dir and not os.path.isabs(value):
            value = os.path.join(base_dir, value)
        settings[key] = _convert(key, value, where)

    inline = []
    for line_no, raw in record_lines:
        inline.extend(iter_records([raw], path=path, start_line=line_no))
    return settings, tuple(inline)


def _env_settings(environ):
    settings = {}
    for key in _FIELD_TYPES:
        env_key = ENV_PREFIX + key.upper()
        raw = environ.get(env_key, "")
        if raw:
            settings[key] = _convert(key, raw, env_key)
    return settings


def load_config(path=None, overrides=None, environ=None):
    """Build an AppConfig: flags > SCORE_* env vars > config file > defaults."""
    environ = os.environ if environ is None else environ
    path = path or environ.get(CONFIG_FILE_ENV, "")
    file_settings, inline = {}, ()
    if path:
        try:
            with open(path, "r", encoding="utf-8") as f:
                text = f.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config file {path}: {exc}") from None
        file_settings, inline = parse_config_text(text, path=str(path))
        logger.info("Loaded config %s (%s settings, %s inline records)", path, len(file_settings), len(inline))

    merged = dict(file_settings)
    merged.update(_env_settings(environ))
    merged.update({k: v for k, v in (overrides or {}).items() if v is not None})
    unknown = set(merged) - set(_FIELD_TYPES)
    if unknown:
        raise ConfigError(f"unknown settings: {', '.join(sorted(unknown))}")
    return replace(AppConfig(), inline_records=inline, source_path=str(path or ""), **merged)


def config_problems(cfg, required=None):
    """Every missing file and out-of-range value, as human readable strings."""
    from diagnostics import REQUIRED_PATHS, runtime_config_validation

    report = runtime_config_validation(cfg, required=REQUIRED_PATHS if required is None else required)
    problems = [f"{p['name']}: {p['error']}" for p in report["paths"] if p.get("ok") is False]
    problems.extend(r["error"] for r in report["ranges"] if not r["ok"])
    return problems


def validate_config(cfg, required=None):
    problems = config_problems(cfg, required)
    if problems:
        raise ConfigError("invalid configuration: " + "; ".join(problems), problems=problems)
    return cfg


def as_dict(cfg):
    out = {f.name: getattr(cfg, f.name) for f in fields(cfg) if f.name != "inline_records"}
    out["inline_records"] = len(cfg.inline_records)
    return out
