import pytest

from harmsum.sieve import SieveTable


@pytest.fixture(scope="session")
def sieve_small() -> SieveTable:
    return SieveTable(20_000)


@pytest.fixture(scope="session")
def sieve_million() -> SieveTable:
    return SieveTable(1_000_000)
