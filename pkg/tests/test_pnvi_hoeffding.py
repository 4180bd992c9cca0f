"""Tests for pessimistic Nash value iteration with Hoeffding bonuses."""

import math
import time

import numpy as np
import pytest

from offline_zsg.core.exact_eval import best_response_value, duality_gap
from offline_zsg.core.game_model import GameDims, SolveMode, TurnBasedMinStrategy, random_game
from offline_zsg.core.offline_data import sample_dataset, uniform_exploration
from offline_zsg.core.pnvi_hoeffding import compute_iota, hoeffding_bonus, run_pnvi_hoeffding, solve_bounds
from offline_zsg.utils.exceptions import (
    ConfigurationError,
    InsufficientDataError,
    InvalidDimensionError,
    LearnerTimeoutError,
)

DELTA = 0.05


@pytest.fixture(scope="module")
def pessimism_game():
    return random_game(2024, S=3, A=2, B=2, H=3)


class TestBonus:
    def test_unvisited(self):
        iota = 3.0
        assert hoeffding_bonus(np.array(0), 5, iota) == pytest.approx(4 * 5 * math.sqrt(iota))

    def test_four_visits(self):
        iota = 3.0
        assert hoeffding_bonus(np.array(4), 5, iota) == pytest.approx(2 * 5 * math.sqrt(iota))

    def test_constant_scales(self):
        counts = np.array([1, 9, 100])
        assert np.allclose(hoeffding_bonus(counts, 2, 1.0, constant=1.0) * 4, hoeffding_bonus(counts, 2, 1.0))

    def test_iota(self):
        dims = GameDims(3, 2, 2, 3)
        assert compute_iota(dims, 0.05) == pytest.approx(math.log(36 / 0.05))
        with pytest.raises(ConfigurationError):
            compute_iota(dims, 1.0)


class TestRunHoeffding:
    def test_brackets_bandit_value(self, hardness):
        ds = sample_dataset(hardness.game1, hardness.rho, 100_000, seed=0)
        out = run_pnvi_hoeffding(ds, hardness.game1.dims, DELTA)
        assert out.V_low.V[0, 0] <= 0.25 + 1e-6
        assert out.V_up.V[0, 0] >= 0.25 - 1e-6
        assert out.algorithm == "hoeffding"

    def test_sandwich_invariants(self):
        for i in range(50):
            game = random_game(100 + i, S=2 + i % 2, A=2, B=2, H=1 + i % 3)
            ds = sample_dataset(game, uniform_exploration(game.dims), 200 + 40 * i, seed=i)
            out = run_pnvi_hoeffding(ds, game.dims, DELTA, seed=i)
            assert np.all(out.Q_low <= out.Q_up + 1e-12)
            assert np.all(out.V_low.V <= out.V_up.V + 1e-12)
            assert np.all(out.Q_low >= 0.0)
            assert np.all(out.Q_up >= 0.0)
            steps = np.arange(game.horizon)[:, None, None, None]
            assert np.all(out.Q_up <= game.horizon - steps)

    def test_deterministic(self, small_game):
        ds = sample_dataset(small_game, uniform_exploration(small_game.dims), 3000, seed=1)
        a = run_pnvi_hoeffding(ds, small_game.dims, DELTA, seed=4)
        b = run_pnvi_hoeffding(ds, small_game.dims, DELTA, seed=4)
        assert np.array_equal(a.V_low.V, b.V_low.V)
        assert np.array_equal(a.mu_low.dist, b.mu_low.dist)
        assert np.array_equal(a.nu_up.dist, b.nu_up.dist)

    def test_output_shapes_and_diagnostics(self, small_game):
        ds = sample_dataset(small_game, uniform_exploration(small_game.dims), 600, seed=2)
        out = run_pnvi_hoeffding(ds, small_game.dims, DELTA)
        pair = out.pair()
        assert pair.mu is out.mu_low and pair.nu is out.nu_up
        assert out.nu_low.dist.shape == (3, 3, 2)
        assert out.mu_up.dist.shape == (3, 3, 2)
        assert out.bonus_low.shape == small_game.rewards.shape
        assert len(out.diagnostics.stage_max_bonus) == 3
        assert sum(out.diagnostics.stage_total_count) == 3 * 200
        assert duality_gap(small_game, pair) >= -1e-9

    def test_turn_based_outputs_are_pure(self, turn_based_game):
        ds = sample_dataset(turn_based_game, uniform_exploration(turn_based_game.dims), 2000, seed=0)
        out = run_pnvi_hoeffding(ds, turn_based_game.dims, DELTA)
        assert isinstance(out.nu_up, TurnBasedMinStrategy)
        assert out.mu_low.is_deterministic() and out.nu_up.is_deterministic()

    def test_insufficient_data(self, small_game):
        ds = sample_dataset(small_game, uniform_exploration(small_game.dims), 2, seed=0)
        with pytest.raises(InsufficientDataError):
            run_pnvi_hoeffding(ds, small_game.dims, DELTA)

    def test_dims_mismatch(self, small_game):
        ds = sample_dataset(small_game, uniform_exploration(small_game.dims), 30, seed=0)
        with pytest.raises(InvalidDimensionError):
            run_pnvi_hoeffding(ds, GameDims(3, 2, 3, 3), DELTA)

    def test_deadline(self, small_game):
        ds = sample_dataset(small_game, uniform_exploration(small_game.dims), 30, seed=0)
        with pytest.raises(LearnerTimeoutError):
            run_pnvi_hoeffding(ds, small_game.dims, DELTA, deadline=time.monotonic() - 1.0)

    def test_deadline_checked_per_state(self):
        Q = np.random.default_rng(3).random((4, 3, 3))
        started = time.monotonic()
        solve_bounds(Q, Q, SolveMode.SIMULTANEOUS, 1e-8, stage=2, deadline=started + 60.0, started=started)
        with pytest.raises(LearnerTimeoutError, match="stage 2, state 0"):
            solve_bounds(Q, Q, SolveMode.SIMULTANEOUS, 1e-8, stage=2, deadline=started - 1.0, started=started)


def pessimism_holds(game, out) -> bool:
    s1 = game.initial_state
    lower = best_response_value(game, out.mu_low).values.initial_value(s1)
    upper = best_response_value(game, out.nu_up).values.initial_value(s1)
    return out.V_low.V[0, s1] <= lower + 1e-9 and out.V_up.V[0, s1] >= upper - 1e-9


def pessimism_rate(game, seeds) -> float:
    rho = uniform_exploration(game.dims)
    held = []
    for seed in seeds:
        ds = sample_dataset(game, rho, 10_000, seed)
        held.append(pessimism_holds(game, run_pnvi_hoeffding(ds, game.dims, DELTA, seed=seed)))
    return float(np.mean(held))


def test_pessimism_reduced(pessimism_game):
    assert pessimism_rate(pessimism_game, range(10)) >= 0.8


@pytest.mark.slow
def test_pessimism_high_probability(pessimism_game):
    assert pessimism_rate(pessimism_game, range(200)) >= 0.9
