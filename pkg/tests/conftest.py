import pytest

from freqsuc import data_path
from freqsuc.system import load_system


@pytest.fixture(scope="session")
def gb():
    return load_system(data_path("gb2030.json"))
