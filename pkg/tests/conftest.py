import numpy as np
import pytest

from msrom.avf import AvfConfig
from msrom.fom import run_fom
from msrom.models import kdv_model, nls1d_model, nls2d_model, zk_model

# criterion number -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE = {}


def small_models():
    """Coarse versions of every model, cheap enough for unit tests."""
    return {
        "kdv": kdv_model(nx=128),
        "nls1d": nls1d_model(nx=200),
        "zk": zk_model(nx=24),
        "nls2d": nls2d_model(nx=24),
    }


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def kdv_small_run():
    model = kdv_model(nx=128)
    cfg = AvfConfig(dt=0.02)
    traj, energy = run_fom(model, cfg, 2.0)
    return model, cfg, traj, energy


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"criterion {key:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
