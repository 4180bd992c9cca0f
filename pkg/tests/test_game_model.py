"""Tests for the game model: validation, instances, strategies."""

import numpy as np
import pytest

from offline_zsg.config import reload_settings
from offline_zsg.core.exact_eval import nash_vi
from offline_zsg.core.game_model import (
    ExplorationPolicy,
    Game,
    GameDims,
    Player,
    SolveMode,
    Strategy,
    StrategyPair,
    TurnBasedMinStrategy,
    compile_turn_based,
    conditional_min_dist,
    make_hardness_pair,
    random_game,
    solve_mode_for,
    validate_game,
    with_initial_distribution,
)
from offline_zsg.utils.exceptions import (
    InvalidDimensionError,
    InvalidStrategyError,
    NotTurnBasedError,
)
from tests.oracles import zero_game


class TestValidateGame:
    def test_random_game_is_valid(self):
        report = validate_game(random_game(1, S=3, A=2, B=2, H=3))
        assert report.ok
        assert len(report) == 0

    def test_row_not_summing_to_one(self, small_game):
        P = small_game.transitions.copy()
        P[1, 2, 0, 1] *= 0.99
        report = validate_game(Game(P, small_game.rewards))
        assert len(report) == 1
        violation = report.violations[0]
        assert violation.index == (1, 2, 0, 1)
        assert violation.constraint == "transition row must sum to 1"

    def test_reward_out_of_range(self, small_game):
        r = small_game.rewards.copy()
        r[0, 0, 1, 1] = 1.5
        report = validate_game(small_game.with_rewards(r))
        assert [v.constraint for v in report] == ["reward out of [0,1]"]
        assert report.violations[0].value == 1.5

    def test_negative_probability_and_bad_initial_state(self, small_game):
        P = small_game.transitions.copy()
        P[0, 0, 0, 0] = [-0.5, 1.0, 0.5]
        report = validate_game(Game(P, small_game.rewards, initial_state=7))
        constraints = {v.constraint for v in report}
        assert "negative transition probability" in constraints
        assert "initial state out of range" in constraints

    def test_never_raises_on_nan(self, small_game):
        P = small_game.transitions.copy()
        P[2, 1, 1, 0, 0] = np.nan
        report = validate_game(Game(P, small_game.rewards))
        assert not report.ok
        assert "non-finite transition probability" in {v.constraint for v in report}


class TestGame:
    def test_arrays_are_read_only(self, small_game):
        with pytest.raises(ValueError):
            small_game.rewards[0, 0, 0, 0] = 0.3

    def test_shape_mismatch(self):
        with pytest.raises(InvalidDimensionError, match="invalid dimension"):
            Game(np.ones((1, 2, 2, 2, 3)) / 3, np.zeros((1, 2, 2, 2)))

    def test_dims(self, small_game):
        dims = small_game.dims
        assert (dims.S, dims.A, dims.B, dims.H) == (3, 2, 2, 3)
        assert dims.table_shape == (3, 3, 2, 2)

    def test_dims_reject_bad_initial_state(self):
        with pytest.raises(InvalidDimensionError):
            GameDims(2, 2, 2, 2, initial_state=2)


class TestRandomGame:
    def test_deterministic_in_seed(self):
        g1 = random_game(5, S=2, A=3, B=2, H=2)
        g2 = random_game(5, S=2, A=3, B=2, H=2)
        g3 = random_game(6, S=2, A=3, B=2, H=2)
        assert np.array_equal(g1.transitions, g2.transitions)
        assert np.array_equal(g1.rewards, g2.rewards)
        assert not np.array_equal(g1.rewards, g3.rewards)

    def test_strictly_positive_transitions(self):
        game = random_game(2, S=4, A=2, B=2, H=2)
        assert np.all(game.transitions > 0.0)
        assert np.allclose(game.transitions.sum(axis=-1), 1.0, rtol=0.0, atol=1e-12)
        assert np.all((game.rewards >= 0.0) & (game.rewards < 1.0))

    def test_bit_generators_differ(self):
        a = random_game(1, S=2, A=2, B=2, H=1, bit_generator="philox")
        b = random_game(1, S=2, A=2, B=2, H=1, bit_generator="pcg64")
        assert not np.array_equal(a.rewards, b.rewards)

    @pytest.mark.parametrize("dims", [(0, 2, 2, 3), (3, 0, 2, 3), (3, 2, 2, 0)])
    def test_zero_dimension(self, dims):
        S, A, B, H = dims
        with pytest.raises(InvalidDimensionError, match="invalid dimension"):
            random_game(1, S=S, A=A, B=B, H=H)


class TestHardnessPair:
    def test_tables(self, hardness):
        assert hardness.game1.rewards[0, 0, 1, 0] == 0.0
        assert hardness.game2.rewards[0, 0, 1, 0] == 1.0
        other = np.ones((2, 2), dtype=bool)
        other[1, 0] = False
        assert np.array_equal(hardness.game1.rewards[0, 0][other], hardness.game2.rewards[0, 0][other])
        assert np.array_equal(hardness.game1.transitions, hardness.game2.transitions)

    def test_exploration_skips_a2_b1(self, hardness):
        rho = hardness.rho.dist[0, 0]
        assert rho[1, 0] == 0.0
        assert np.allclose(rho[[0, 0, 1], [0, 1, 1]], 1.0 / 3.0)

    def test_larger_instance(self):
        pair = make_hardness_pair(num_actions_max=3, num_actions_min=3, horizon=2)
        table = pair.game1.rewards[0, 0]
        assert table[2, 0] == 0.0 and table[2, 1] == 0.0
        assert table[0, 2] == 1.0 and table[1, 2] == 1.0
        assert np.all(pair.game1.rewards[1] == 0.0)
        rho = pair.rho.dist[0, 0]
        assert rho[1, 0] == 0.0
        assert rho[2, 2] == 0.0
        assert np.isclose(rho.sum(), 1.0)
        assert validate_game(pair.game1).ok and validate_game(pair.game2).ok

    def test_needs_two_actions(self):
        with pytest.raises(InvalidDimensionError):
            make_hardness_pair(num_actions_max=1)


class TestTurnBased:
    def test_compile(self, turn_based_game):
        assert compile_turn_based(turn_based_game) is SolveMode.TURN_BASED
        assert solve_mode_for(turn_based_game.dims) is SolveMode.TURN_BASED

    def test_not_turn_based(self, small_game):
        with pytest.raises(NotTurnBasedError, match="not a turn-based game"):
            compile_turn_based(small_game)
        assert solve_mode_for(small_game) is SolveMode.SIMULTANEOUS

    def test_hardness_max_min_value(self, hardness):
        game = hardness.game1.as_turn_based()
        solution = nash_vi(game)
        assert solution.values.initial_value(0) == pytest.approx(0.25)
        assert solution.pi_star.mu.dist[0, 0, 0] == 1.0

    def test_zero_reward_value(self):
        solution = nash_vi(zero_game().as_turn_based())
        assert np.all(solution.values.V == 0.0)


class TestStrategies:
    def test_rejects_non_distribution(self):
        with pytest.raises(InvalidStrategyError):
            Strategy(Player.MAX, np.array([[[0.6, 0.6]]]))

    def test_deterministic_and_uniform(self):
        det = Strategy.deterministic(Player.MIN, np.array([[1, 0]]), 3)
        assert det.is_deterministic()
        assert np.array_equal(det.dist[0, 0], [0.0, 1.0, 0.0])
        uni = Strategy.uniform(Player.MAX, 2, 2, 4)
        assert not uni.is_deterministic()
        assert np.allclose(uni.dist, 0.25)

    def test_pair_joint_is_distribution(self, small_game):
        mu = Strategy.uniform(Player.MAX, 3, 3, 2)
        nu = Strategy.deterministic(Player.MIN, np.zeros((3, 3), dtype=int), 2)
        joint = StrategyPair(mu, nu).joint()
        assert joint.shape == small_game.rewards.shape
        assert np.allclose(joint.sum(axis=(2, 3)), 1.0)

    def test_pair_rejects_swapped_players(self):
        mu = Strategy.uniform(Player.MAX, 1, 1, 2)
        with pytest.raises(InvalidStrategyError):
            StrategyPair(mu, mu)

    def test_conditional_min_dist(self):
        nu = Strategy(Player.MIN, np.array([[[0.3, 0.7]]]))
        table = conditional_min_dist(nu, 3)
        assert table.shape == (1, 1, 3, 2)
        assert np.allclose(table[0, 0], [[0.3, 0.7]] * 3)
        tb = TurnBasedMinStrategy(np.array([[[[1.0, 0.0], [0.0, 1.0]]]]))
        assert conditional_min_dist(tb, 2) is tb.dist

    def test_exploration_policy_validation(self):
        with pytest.raises(InvalidStrategyError):
            ExplorationPolicy(np.full((1, 1, 2, 2), 0.3))

    def test_turn_based_min_player(self):
        tb = TurnBasedMinStrategy(np.array([[[[1.0, 0.0], [0.5, 0.5]]]]))
        assert tb.player is Player.MIN
        assert TurnBasedMinStrategy.player is Player.MIN

    def test_probability_tolerance_from_settings(self, monkeypatch, small_game):
        loose = np.array([[[0.5, 0.5 + 1e-8]]])
        with pytest.raises(InvalidStrategyError):
            Strategy(Player.MAX, loose)
        P = small_game.transitions.copy()
        P[0, 0, 0, 0, 0] += 1e-8
        assert not validate_game(Game(P, small_game.rewards)).ok

        monkeypatch.setenv("OFFLINE_ZSG_PROB_TOLERANCE", "1e-6")
        reload_settings()
        assert Strategy(Player.MAX, loose).num_actions == 2
        assert validate_game(Game(P, small_game.rewards)).ok
        assert not validate_game(Game(P, small_game.rewards), tol=1e-12).ok


def test_with_initial_distribution(small_game):
    p0 = np.array([0.2, 0.5, 0.3])
    extended = with_initial_distribution(small_game, p0)
    assert validate_game(extended).ok
    assert extended.horizon == small_game.horizon + 1
    values = nash_vi(small_game).values
    start = nash_vi(extended).values.initial_value(extended.initial_state)
    assert start == pytest.approx(float(p0 @ values.V[0]), abs=1e-7)
