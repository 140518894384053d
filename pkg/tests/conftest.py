import warnings
from pathlib import Path

import pytest

warnings.filterwarnings("ignore", message=".*TBB.*")

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"


@pytest.fixture(scope="session")
def config_dir() -> Path:
    return CONFIG_DIR


@pytest.fixture(scope="session", autouse=True)
def _warm_kernels():
    # compile the jit kernels once so per-test timings stay meaningful
    import branchlab as bl

    cfg = bl.SimConfig(initial_n=5, grid=(0.1,), horizon=0.1, replicates=2,
                       seed=0, explosion_cap=1000)
    bl.simulate_ensemble(bl.ProcessParams(1.0, bl.Geometric(0.5)), cfg)
