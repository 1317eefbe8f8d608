from __future__ import annotations

import pytest

from lstic.numfield import TowerSpec, load_tower

TOWER_NAMES = ("golden", "perfect3", "perfect4", "perfect6", "alamouti")


@pytest.fixture(scope="session")
def towers() -> dict[str, TowerSpec]:
    return {name: load_tower(name) for name in TOWER_NAMES}


@pytest.fixture(scope="session")
def golden(towers):
    return towers["golden"]


@pytest.fixture(scope="session")
def alamouti(towers):
    return towers["alamouti"]


@pytest.fixture(scope="session", params=TOWER_NAMES)
def tower(request, towers) -> TowerSpec:
    """Parametrized fixture running a test once per tower."""
    return towers[request.param]
