import pytest

from refhub import Hub
from refhub.fixtures import configure_f1_channels, load_f1


@pytest.fixture
def hub():
    return Hub("test")


@pytest.fixture
def f1():
    h = Hub("test")
    load_f1(h)
    return h


@pytest.fixture
def f1_channels():
    """F1 plus the standard channels; lab managers arbitrate."""
    h = Hub("test")
    load_f1(h)
    configure_f1_channels(h)
    return h


@pytest.fixture
def f1_eval():
    """F1 with managers capped at Evaluate (nobody arbitrates)."""
    h = Hub("test")
    load_f1(h)
    configure_f1_channels(h, manager_right="Evaluate")
    return h
