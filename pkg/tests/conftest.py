import pytest
from rich.console import Console

from superell.config import Settings
from superell.ff import FieldSpec, make_field


@pytest.fixture(scope="session")
def F3() -> FieldSpec:
    return make_field(3)


@pytest.fixture(scope="session")
def F4() -> FieldSpec:
    """F_4 = F_2[x]/(x^2+x+1); element index 2 is x, index 3 is x+1."""
    return make_field(2, 2)


@pytest.fixture(scope="session")
def F5() -> FieldSpec:
    return make_field(5)


@pytest.fixture(scope="session")
def F7() -> FieldSpec:
    return make_field(7)


@pytest.fixture(scope="session")
def F9() -> FieldSpec:
    """F_9 = F_3[x]/(x^2+1)."""
    return make_field(3, 2)


@pytest.fixture
def quiet_console() -> Console:
    """A stderr console that swallows progress output."""
    return Console(stderr=True, quiet=True)


@pytest.fixture
def small_settings() -> Settings:
    """Small shards so even tiny scans exercise the merge path."""
    return Settings(shard_size=7, range_shard_size=7)
