import pytest

import config
import telemetry
from runtime import build_runtime

# Four nodes on a small square; edge lengths double as weights when alpha=1, beta=0.
FOUR_NODE_NET = """\
# four-node routing example
N 1 48.000 11.000 depot
N 2 48.000 11.010
N 3 48.010 11.000
N 4 48.010 11.010 office
E 1 2 1
E 2 4 1
E 1 3 1
E 3 4 3
E 1 4 5
"""

FLAT_OFFLINE = """\
O 1 0 0.5
O 2 0 0.5
O 3 0 0.5
O 4 0 0.5
"""


@pytest.fixture(autouse=True)
def fresh_metrics(monkeypatch):
    """Each test gets its own counter registry and no webhook targets."""
    monkeypatch.setattr(telemetry, "metrics", telemetry.Metrics())
    monkeypatch.delenv("SCORE_WEBHOOK_URLS", raising=False)
    monkeypatch.delenv("SCORE_CONFIG_FILE", raising=False)
    return telemetry.metrics


@pytest.fixture
def write_file(tmp_path):
    def write(name, text):
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return str(path)
    return write


@pytest.fixture
def make_runtime(write_file):
    def make(net_text=FOUR_NODE_NET, offline_text=FLAT_OFFLINE, **overrides):
        overrides.setdefault("network_path", write_file("net.txt", net_text))
        overrides.setdefault("offline_path", write_file("offline.txt", offline_text))
        cfg = config.validate_config(config.load_config(None, overrides, environ={}))
        return build_runtime(cfg, clock=lambda: 12.0)
    return make
