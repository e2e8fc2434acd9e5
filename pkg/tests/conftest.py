import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))  # make oracles importable

from rt0eig import UNIT_SQUARE, build_structured_mesh


@pytest.fixture(scope="session")
def unit_mesh_n2():
    return build_structured_mesh(UNIT_SQUARE, 2)


@pytest.fixture(scope="session")
def unit_mesh_n4():
    return build_structured_mesh(UNIT_SQUARE, 4)


@pytest.fixture(scope="session")
def unit_mesh_n8():
    return build_structured_mesh(UNIT_SQUARE, 8)
