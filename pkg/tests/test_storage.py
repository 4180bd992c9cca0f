"""Tests for JSON codecs and the dataset / sweep CSV formats."""

import json
import math

import numpy as np
import pytest

from offline_zsg.core.exact_eval import coverage_report, nash_vi
from offline_zsg.core.offline_data import sample_dataset, uniform_exploration
from offline_zsg.core.pnvi_bernstein import run_pnvi_bernstein
from offline_zsg.storage.dataset_csv import COLUMNS, meta_path, read_dataset, write_dataset
from offline_zsg.storage.json_codec import (
    coverage_report_from_dict,
    coverage_report_to_dict,
    game_to_dict,
    load_exploration,
    load_game,
    load_pair,
    load_strategy,
    pnvi_output_to_dict,
    save_game,
    save_strategy,
    write_json,
)
from offline_zsg.storage.results_csv import (
    SweepRow,
    read_results,
    read_timings,
    timings_path,
    write_results,
    write_timings,
)
from offline_zsg.utils.exceptions import DatasetError, GameFileError, InvalidGameError, InvalidStrategyError


class TestGameFiles:
    def test_save_and_load(self, tmp_path, small_game):
        path = save_game(small_game, tmp_path / "game.json")
        loaded = load_game(path)
        assert np.array_equal(loaded.transitions, small_game.transitions)
        assert np.array_equal(loaded.rewards, small_game.rewards)
        assert loaded.name == small_game.name

    def test_malformed_json_reports_line(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text('{\n  "S": 1,\n  "A": 2,\n  oops\n}\n', encoding="utf-8")
        with pytest.raises(GameFileError) as err:
            load_game(path)
        assert err.value.line == 4
        assert "line 4" in str(err.value)

    def test_missing_fields(self, tmp_path):
        path = write_json({"S": 1, "A": 1}, tmp_path / "partial.json")
        with pytest.raises(GameFileError, match="missing game fields"):
            load_game(path)

    def test_declared_dims_disagree(self, tmp_path, small_game):
        data = game_to_dict(small_game)
        data["S"] = 4
        with pytest.raises(GameFileError):
            load_game(write_json(data, tmp_path / "g.json"))

    def test_invalid_game(self, tmp_path, small_game):
        data = game_to_dict(small_game)
        data["r"][0][0][0][0] = 2.0
        with pytest.raises(InvalidGameError) as err:
            load_game(write_json(data, tmp_path / "g.json"))
        assert err.value.violations[0].constraint == "reward out of [0,1]"


class TestStrategyFiles:
    def test_nash_solution_file_loads_as_pair(self, tmp_path, small_game):
        solution = nash_vi(small_game)
        save_strategy(solution.pi_star, tmp_path / "pi.json")
        pair = load_pair(tmp_path / "pi.json")
        assert np.array_equal(pair.mu.dist, solution.pi_star.mu.dist)
        assert np.array_equal(pair.nu.dist, solution.pi_star.nu.dist)

    def test_turn_based_pair(self, tmp_path, turn_based_game):
        pi = nash_vi(turn_based_game).pi_star
        save_strategy(pi, tmp_path / "tb.json")
        assert load_pair(tmp_path / "tb.json").turn_based

    def test_learner_output_loads_as_pair(self, tmp_path, small_game):
        ds = sample_dataset(small_game, uniform_exploration(small_game.dims), 900, seed=0)
        out = run_pnvi_bernstein(ds, small_game.dims, 0.05)
        data = pnvi_output_to_dict(out)
        assert data["c"] == 1.0 and "reference" in data and "bernstein_bonuses" in data
        pair = load_pair(write_json(data, tmp_path / "out.json"))
        assert np.array_equal(pair.mu.dist, out.mu_low.dist)

    def test_exploration(self, tmp_path, hardness):
        save_strategy(hardness.rho, tmp_path / "rho.json")
        rho = load_exploration(tmp_path / "rho.json")
        assert rho.name == "hardness"
        assert np.array_equal(rho.dist, hardness.rho.dist)
        with pytest.raises(InvalidStrategyError):
            load_pair(tmp_path / "rho.json")

    def test_unknown_player(self, tmp_path):
        write_json({"player": "third", "dist": [[[1.0]]]}, tmp_path / "s.json")
        with pytest.raises(GameFileError):
            load_strategy(tmp_path / "s.json")


class TestCoverageReportCodec:
    def test_infinite_c_star(self, hardness):
        report = coverage_report(hardness.game1, hardness.rho, nash_vi(hardness.game1).pi_star)
        data = coverage_report_to_dict(report)
        assert data["c_star"] == "inf"
        json.dumps(data)
        restored = coverage_report_from_dict(json.loads(json.dumps(data)))
        assert math.isinf(restored.c_star)
        assert restored.witness.a == 1 and restored.witness.b == 0


class TestDatasetCsv:
    def test_write_and_read(self, tmp_path, small_game):
        ds = sample_dataset(small_game, uniform_exploration(small_game.dims), 50, seed=5)
        path = write_dataset(ds, tmp_path / "data.csv")
        assert meta_path(path).exists()
        assert path.read_text().splitlines()[0] == ",".join(COLUMNS)
        loaded = read_dataset(path)
        assert np.array_equal(loaded.states, ds.states)
        assert np.array_equal(loaded.rewards, ds.rewards)
        assert loaded.provenance.seed == 5

    def test_needs_dims_without_sidecar(self, tmp_path, small_game):
        ds = sample_dataset(small_game, uniform_exploration(small_game.dims), 5, seed=0)
        path = write_dataset(ds, tmp_path / "data.csv")
        meta_path(path).unlink()
        with pytest.raises(DatasetError):
            read_dataset(path)
        assert read_dataset(path, dims=small_game.dims).n_episodes == 5

    def test_broken_chain_reports_line(self, tmp_path, small_game):
        path = tmp_path / "bad.csv"
        path.write_text(
            "episode,h,s,a,b,r,s_next\n"
            "0,0,0,0,0,0.5,1\n"
            "0,1,2,0,0,0.5,1\n"
            "0,2,1,0,0,0.5,0\n",
            encoding="utf-8",
        )
        with pytest.raises(DatasetError) as err:
            read_dataset(path, dims=small_game.dims)
        assert err.value.line == 3

    def test_missing_step(self, tmp_path, small_game):
        path = tmp_path / "short.csv"
        path.write_text("episode,h,s,a,b,r,s_next\n0,0,0,0,0,0.5,1\n0,1,1,0,0,0.5,1\n", encoding="utf-8")
        with pytest.raises(DatasetError, match="expected 3"):
            read_dataset(path, dims=small_game.dims)

    def test_missing_column(self, tmp_path, small_game):
        path = tmp_path / "cols.csv"
        path.write_text("episode,h,s,a,b,r\n0,0,0,0,0,0.5\n", encoding="utf-8")
        with pytest.raises(DatasetError, match="missing columns"):
            read_dataset(path, dims=small_game.dims)


class TestResultsCsv:
    rows = [
        SweepRow("hoeffding", 4.0, 1000, 1, "ok", gap=0.1, V_low_1=0.2, V_up_1=0.4, c_star=2.5, d_m=0.01),
        SweepRow("bernstein", 1.0, 100, 0, "failed", c_star=math.inf, d_m=0.01, error="NashSolverError: x"),
        SweepRow("bernstein", 1.0, 10, 3, "ok", gap=1 / 3, V_low_1=0.0, V_up_1=1.0, c_star=2.5, d_m=0.01),
    ]

    def test_sorted_and_restored(self, tmp_path):
        path = write_results(self.rows, tmp_path / "sweep.csv")
        restored = read_results(path)
        assert [r.key for r in restored] == sorted(r.key for r in self.rows)
        ok = restored[0]
        assert ok.gap == 1 / 3
        failed = restored[1]
        assert not failed.ok and math.isnan(failed.gap) and failed.error == "NashSolverError: x"
        assert math.isinf(failed.c_star)
        assert restored[2].error == ""

    def test_byte_deterministic(self, tmp_path):
        a = write_results(self.rows, tmp_path / "a.csv").read_bytes()
        b = write_results(list(reversed(self.rows)), tmp_path / "b.csv").read_bytes()
        assert a == b

    def test_timings_sidecar(self, tmp_path):
        path = tmp_path / "sweep.csv"
        write_timings({self.rows[0].key: 1.5}, path)
        assert timings_path(path).name == "sweep.csv.timings.csv"
        assert read_timings(path) == {self.rows[0].key: 1.5}
        assert read_timings(tmp_path / "none.csv") == {}

    def test_missing_columns(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("algorithm,n\nhoeffding,10\n", encoding="utf-8")
        with pytest.raises(DatasetError):
            read_results(path)
