"""Shared fixtures: the hard bandit instance, small random games, matrix games."""

import numpy as np
import pytest

from offline_zsg.config import reload_settings
from offline_zsg.core.game_model import make_hardness_pair, random_game


@pytest.fixture(autouse=True)
def isolated_settings(monkeypatch, tmp_path):
    """Fresh settings per test, no log file, no stray .env."""
    monkeypatch.chdir(tmp_path)
    monkeypatch.setenv("OFFLINE_ZSG_LOG_FILE", "")
    reload_settings()
    yield
    monkeypatch.undo()
    reload_settings()


@pytest.fixture
def hardness():
    return make_hardness_pair()


@pytest.fixture
def bandit1_table():
    return np.array([[0.25, 0.5], [0.0, 0.75]])


@pytest.fixture
def bandit2_table():
    return np.array([[0.25, 0.5], [1.0, 0.75]])


@pytest.fixture
def rps():
    """Rock-paper-scissors with win 1, tie 0.5, loss 0."""
    return np.array([[0.5, 0.0, 1.0], [1.0, 0.5, 0.0], [0.0, 1.0, 0.5]])


@pytest.fixture
def small_game():
    return random_game(1, S=3, A=2, B=2, H=3)


@pytest.fixture
def turn_based_game():
    return random_game(3, S=2, A=2, B=3, H=2, turn_based=True)


