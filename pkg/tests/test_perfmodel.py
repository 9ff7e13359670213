import numpy as np
import pytest

from eusearch.exact import instance_of_depth
from eusearch.minimin import EmptySample, Outcome
from eusearch.perfmodel import (
    EmpiricalTable,
    MarkovParams,
    MissingAccuracy,
    OutOfRange,
    fit_empirical,
    fit_markov,
    load_model,
    markov_predict,
    model_from_dict,
    model_to_dict,
    nodes_per_decision,
    predict,
    save_model,
)
from eusearch.puzzle import ProblemInstance, apply_op, goal_state, legal_ops


def simple_params(p=0.75, levels=(1, 2, 3, 4), max_len=1000):
    acc = {l: min(1.0, p + 0.05 * (l - levels[0])) for l in levels}
    return MarkovParams(
        accuracy=acc,
        branching={l: 1.7 for l in levels},
        max_len=max_len,
    )


class TestMarkovParams:
    def test_accuracy_range_enforced(self):
        with pytest.raises(ValueError):
            MarkovParams(accuracy={1: 0.4}, branching={1: 1.7})
        with pytest.raises(ValueError):
            MarkovParams(accuracy={1: 1.1}, branching={1: 1.7})

    def test_monotone_accuracy_enforced(self):
        with pytest.raises(ValueError):
            MarkovParams(accuracy={1: 0.9, 2: 0.7}, branching={1: 1.7, 2: 1.7})

    def test_branching_must_exceed_one(self):
        with pytest.raises(ValueError):
            MarkovParams(accuracy={1: 0.8}, branching={1: 1.0})

    def test_nodes_per_decision_geometric(self):
        params = simple_params()
        b = 1.7
        assert nodes_per_decision(params, 3) == pytest.approx(b + b**2 + b**3)


class TestMarkovPredict:
    def test_perfect_accuracy_is_deterministic_depth(self):
        params = MarkovParams(accuracy={2: 1.0}, branching={2: 1.7})
        lot = markov_predict(params, d=7, level=2, samples=500, seed=1)
        assert len(lot.entries) == 1
        outcome, prob = lot.entries[0]
        assert prob == 1.0 and outcome.path_length == 7 and outcome.solved

    def test_depth_one_minimum_path(self):
        params = simple_params(p=0.6)
        lot = markov_predict(params, d=1, level=1, samples=2000, seed=2)
        assert min(o.path_length for o, _ in lot.entries) == 1

    def test_parity_preserved(self):
        params = simple_params(p=0.8)
        lot = markov_predict(params, d=6, level=1, samples=1000, seed=3)
        for o, _ in lot.entries:
            if o.solved:
                assert int(o.path_length) % 2 == 0

    def test_hitting_time_mean(self):
        params = simple_params(p=0.75, levels=(1,))
        lot = markov_predict(params, d=20, level=1, samples=100_000, seed=4)
        mean = sum(o.path_length * p for o, p in lot.entries)
        assert mean == pytest.approx(40.0, rel=0.02)

    def test_deterministic_given_seed(self):
        params = simple_params()
        a = markov_predict(params, d=10, level=2, samples=3000, seed=5)
        b = markov_predict(params, d=10, level=2, samples=3000, seed=5)
        assert a == b

    def test_missing_accuracy(self):
        params = simple_params(levels=(1, 2))
        with pytest.raises(MissingAccuracy):
            markov_predict(params, d=5, level=9)

    def test_truncation_yields_unsolved(self):
        params = MarkovParams(accuracy={1: 0.501}, branching={1: 1.7}, max_len=10)
        lot = markov_predict(params, d=9, level=1, samples=4000, seed=6)
        unsolved = [o for o, _ in lot.entries if not o.solved]
        assert unsolved and all(o.path_length == 10 for o in unsolved)

    def test_probabilities_sum_to_one(self):
        params = simple_params(p=0.55)
        lot = markov_predict(params, d=8, level=1, samples=5000, seed=7)
        assert abs(sum(p for _, p in lot.entries) - 1.0) <= 1e-9

    def test_stochastic_dominance_under_coupling(self):
        low = MarkovParams(accuracy={1: 0.6}, branching={1: 1.7})
        high = MarkovParams(accuracy={1: 0.8}, branching={1: 1.7})
        lot_low = markov_predict(low, d=10, level=1, samples=5000, seed=8)
        lot_high = markov_predict(high, d=10, level=1, samples=5000, seed=8)

        def cdf(lot, t):
            return sum(p for o, p in lot.entries if o.path_length <= t)

        for t in range(0, 1001, 10):
            assert cdf(lot_high, t) >= cdf(lot_low, t) - 1e-12


class TestFitMarkov:
    def test_goal_adjacent_training_is_perfect(self):
        goal = goal_state(3)
        training = [
            ProblemInstance(apply_op(goal, op), goal) for op in legal_ops(goal)
        ]
        params = fit_markov(training, [1, 2, 3])
        assert all(p == 1.0 for p in params.accuracy.values())

    def test_accuracy_nondecreasing(self):
        training = [instance_of_depth(10, 3, seed=200 + i) for i in range(8)]
        params = fit_markov(training, [1, 2, 3, 4, 5])
        levels = sorted(params.accuracy)
        for a, b in zip(levels, levels[1:]):
            assert params.accuracy[b] >= params.accuracy[a]

    def test_empty_training_rejected(self):
        with pytest.raises(EmptySample):
            fit_markov([], [1, 2])

    def test_deterministic_refit(self):
        training = [instance_of_depth(8, 3, seed=300 + i) for i in range(5)]
        a = fit_markov(training, [1, 2], seed=9)
        b = fit_markov(training, [1, 2], seed=9)
        assert a == b

    def test_branching_regression(self):
        # frozen from a seeded fit: depth-12 instances, inverse-move pruning
        training = [instance_of_depth(12, 3, seed=1000 + i) for i in range(10)]
        params = fit_markov(training, [1, 2, 3, 4], seed=0)
        assert params.branching[1] == pytest.approx(2.7633, abs=1e-3)
        assert params.branching[4] == pytest.approx(2.0404, abs=1e-3)
        for level in (1, 2, 3, 4):
            assert params.branching[level] > 1.0

    def test_mixed_goals_rejected(self):
        goal = goal_state(3)
        other = apply_op(goal, legal_ops(goal)[0])
        training = [
            ProblemInstance(apply_op(goal, legal_ops(goal)[0]), goal),
            ProblemInstance(goal, other),
        ]
        with pytest.raises(ValueError):
            fit_markov(training, [1])


class TestEmpirical:
    def test_depth_zero_cells_are_zero_outcomes(self):
        goal = goal_state(3)
        suite = {0: [ProblemInstance(goal, goal)] * 3}
        table = fit_empirical(suite, [1, 2])
        for outcomes in table.cells.values():
            assert all(o == Outcome(0, 0, 0, True) for o in outcomes)

    def test_refit_identical(self):
        suite = {6: [instance_of_depth(6, 3, seed=400 + i) for i in range(4)]}
        a = fit_empirical(suite, [1, 2])
        b = fit_empirical(suite, [1, 2])
        assert a.cells == b.cells

    def test_deeper_cells_not_shorter_than_horizon(self):
        insts = [instance_of_depth(8, 3, seed=500 + i) for i in range(6)]
        table = fit_empirical({8: insts}, [1, 8])
        mean_l1 = np.mean([o.path_length for o in table.cells[(8, 1)]])
        mean_horizon = np.mean([o.path_length for o in table.cells[(8, 8)]])
        assert mean_l1 >= mean_horizon

    def test_empty_suite_rejected(self):
        with pytest.raises(EmptySample):
            fit_empirical({}, [1])
        with pytest.raises(EmptySample):
            fit_empirical({3: []}, [1])

    def test_empty_cell_rejected(self):
        with pytest.raises(ValueError):
            EmpiricalTable(cells={(3, 1): ()})


class TestPredict:
    def test_markov_delegation_matches(self):
        params = simple_params()
        a = predict(params, d=9, level=2, samples=2000, seed=11)
        b = markov_predict(params, d=9, level=2, samples=2000, seed=11)
        assert a == b

    def test_single_outcome_cell_degenerate(self):
        o = Outcome(5, 100, 10)
        table = EmpiricalTable(cells={(5, 2): (o,)})
        lot = predict(table, d=5, level=2)
        assert lot.entries == ((o, 1.0),)

    def test_interpolation_midpoint_mean(self):
        o1 = Outcome(10, 100, 10)
        o2 = Outcome(20, 300, 10)
        table = EmpiricalTable(cells={(8, 1): (o1,), (12, 1): (o2,)})
        lot = predict(table, d=10, level=1)
        mean_path = sum(o.path_length * p for o, p in lot.entries)
        assert mean_path == pytest.approx(15.0)

    def test_out_of_range(self):
        table = EmpiricalTable(cells={(8, 1): (Outcome(10, 100, 10),)})
        with pytest.raises(OutOfRange):
            predict(table, d=20, level=1)
        clamped = predict(table, d=20, level=1, extrapolate=True)
        assert clamped.entries[0][0].path_length == 10

    def test_unknown_level(self):
        table = EmpiricalTable(cells={(8, 1): (Outcome(10, 100, 10),)})
        with pytest.raises(MissingAccuracy):
            predict(table, d=8, level=3)


class TestSerialization:
    def test_markov_round_trip(self, tmp_path):
        params = simple_params()
        path = str(tmp_path / "model.yaml")
        save_model(params, path)
        loaded = load_model(path)
        assert loaded == params

    def test_empirical_round_trip(self, tmp_path):
        table = EmpiricalTable(
            cells={(4, 1): (Outcome(4, 12, 6), Outcome(6, 18, 7, solved=False))},
            sample_meta={"seed": 3},
        )
        path = str(tmp_path / "table.yaml")
        save_model(table, path)
        loaded = load_model(path)
        assert loaded.cells == table.cells
        assert loaded.sample_meta == dict(table.sample_meta)

    def test_unknown_kind_rejected(self):
        with pytest.raises(ValueError):
            model_from_dict({"kind": "mystery"})

    def test_dict_round_trip(self):
        params = simple_params()
        assert model_from_dict(model_to_dict(params)) == params
