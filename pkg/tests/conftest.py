from importlib.resources import files
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

# One deterministic profile for the whole suite: no deadline (some
# properties run vectorized batches) and derandomized so reruns are
# byte-identical.
settings.register_profile(
    "suite",
    deadline=None,
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("suite")


@pytest.fixture(scope="session")
def data_dir() -> Path:
    return Path(str(files("sumnorm") / "data"))
