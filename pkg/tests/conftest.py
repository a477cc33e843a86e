import sys
from pathlib import Path

import pytest

sys.setrecursionlimit(100_000)

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(params=["sat", "bdd"])
def solver(request):
    return request.param


@pytest.fixture
def fixture_path():
    return FIXTURES


def read_fixture(name: str) -> str:
    return (FIXTURES / name).read_text(encoding="utf-8")
