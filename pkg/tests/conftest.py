import mpmath as mp
import pytest

from minkmoments.asymptotics import AsymptoticModel
from minkmoments.engine import EngineConfig, bootstrap_with_asymptotics, fixed_point_moments


@pytest.fixture(autouse=True)
def _restore_mp_precision():
    dps = mp.mp.dps
    yield
    mp.mp.dps = dps


@pytest.fixture(scope="session")
def small64():
    return fixed_point_moments(EngineConfig(64, 30)).require_converged()


@pytest.fixture(scope="session")
def plain400():
    return fixed_point_moments(EngineConfig(400, 40)).require_converged()


@pytest.fixture(scope="session")
def reference():
    """Order 500 with a model extension to 1000; accurate far past the order-400 truncation floor."""
    cfg = EngineConfig(500, 60, M=1000, backend="bootstrap")
    model = AsymptoticModel.for_bootstrap("Sint", cfg.dps)
    return bootstrap_with_asymptotics(cfg, model).require_converged()
