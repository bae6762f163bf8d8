import os
import pathlib

import pytest

_ROOT = pathlib.Path(__file__).resolve().parents[2]


@pytest.fixture(scope="session")
def configs():
    return pathlib.Path(os.environ.get("DWC_CONFIGS", _ROOT / "configs"))
