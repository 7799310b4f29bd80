"""Shared test fixtures"""
from pathlib import Path

import pytest

import src


@pytest.fixture
def fs(fs):  # pylint: disable=invalid-name,redefined-outer-name
    """pyfakefs filesystem with the package sources mapped in read-only, so load_dotenv can walk up from them"""
    fs.add_real_directory(str(Path(src.__file__).parent))
    return fs
