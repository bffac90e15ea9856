"""
Shared fixtures for the GEMO test suite
"""

import sys
from pathlib import Path

# Mirror app.py: modules live under src/ and are imported as `utils.*` / `config`
ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "src"))
sys.path.insert(0, str(ROOT))

import pytest

from utils.baselines import BaselineModel
from utils.data_loader import ingest_dataset
from utils.gemo_core import GemoParams


@pytest.fixture(scope="session")
def cancer():
    return ingest_dataset("bladder_cancer")


@pytest.fixture(scope="session")
def glass():
    return ingest_dataset("glass_fiber")


@pytest.fixture
def cancer_gemo_w():
    """Published GEMO-Weibull estimates for the bladder cancer data"""
    return GemoParams(25.5629, 0.2846, 4.0532, BaselineModel("weibull", (0.5946, 3.6174)))


@pytest.fixture
def glass_gemo_w():
    """Published GEMO-Weibull estimates for the glass fibre data"""
    return GemoParams(31.2329, 2.5066, 6.7698, BaselineModel("weibull", (3.1095, 2.1741)))


@pytest.fixture
def exp1():
    return GemoParams.identity(BaselineModel("exponential", (1.0,)))


@pytest.fixture(autouse=True)
def _default_tolerances(monkeypatch):
    for name in ("GEMO_QUAD_TOL", "GEMO_QUAD_ABS_TOL", "GEMO_DEBUG"):
        monkeypatch.delenv(name, raising=False)
