import os
import pathlib

import pytest

DATA = pathlib.Path(__file__).resolve().parent.parent / "data"


@pytest.fixture
def data_dir():
    return DATA


@pytest.fixture
def cli():
    path = os.environ.get("IMPULSE_CLI")
    if not path:
        pytest.skip("IMPULSE_CLI not set")
    return path
