"""Frequency-secured stochastic unit commitment with fast storage response."""

from importlib import resources
from pathlib import Path

__version__ = "0.1.0"


def data_path(name: str) -> Path:
    """Path of a bundled data file such as ``gb2030.json``."""
    return Path(str(resources.files(__package__).joinpath("data", name)))
