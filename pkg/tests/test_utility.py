import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from eusearch.minimin import Outcome
from eusearch.utility import (
    DEFAULT_BOUNDS,
    DEFAULT_EQUIVALENCE_ROWS,
    AttributeMissing,
    AttributeUtility,
    CalibrationFailed,
    InvalidLottery,
    Lottery,
    MalformedModel,
    UtilityModel,
    calibrate_multiplicative,
    choose_max_eu,
    default_utility_model,
    expected_utility,
    expected_value,
    joint_utility,
    utility_model_from_dict,
)

COIN_FLIP = Lottery.of([(10, 0.5), (90, 0.5)])
CERTAIN_55 = Lottery.certain(55)

RISK_AVERSE = AttributeUtility(
    "path_length", ((10.0, 1.0), (55.0, 0.6), (90.0, 0.0)), 90.0
)
RISK_PRONE = AttributeUtility(
    "path_length", ((10.0, 1.0), (55.0, 0.1), (90.0, 0.0)), 90.0
)


class TestLottery:
    def test_probabilities_must_sum_to_one(self):
        with pytest.raises(InvalidLottery):
            Lottery.of([(1, 0.5), (2, 0.4)])

    def test_probabilities_must_be_positive(self):
        with pytest.raises(InvalidLottery):
            Lottery.of([(1, 1.5), (2, -0.5)])

    def test_empty_rejected(self):
        with pytest.raises(InvalidLottery):
            Lottery(())

    def test_uniform(self):
        lot = Lottery.uniform([1, 2, 3, 4])
        assert all(p == 0.25 for _, p in lot.entries)

    @given(st.lists(st.floats(0.01, 10.0), min_size=1, max_size=8))
    @settings(max_examples=50, deadline=None)
    def test_normalized_weights_accepted(self, weights):
        total = sum(weights)
        lot = Lottery.of((i, w / total) for i, w in enumerate(weights))
        assert abs(sum(p for _, p in lot.entries) - 1.0) <= 1e-9


class TestExpectedValue:
    def test_coin_flip_is_50(self):
        assert expected_value(COIN_FLIP) == 50.0

    def test_degenerate(self):
        assert expected_value(CERTAIN_55) == 55.0

    def test_weighted_sum(self):
        lot = Lottery.of([(10, 0.2), (45, 0.3), (90, 0.5)])
        assert expected_value(lot) == 60.5

    def test_rejects_non_scalar(self):
        lot = Lottery.certain(Outcome(1, 1, 1))
        with pytest.raises(TypeError):
            expected_value(lot)


class TestExpectedUtility:
    def test_risk_averse_prefers_certainty(self):
        eu_gamble = expected_utility(COIN_FLIP, RISK_AVERSE)
        eu_certain = expected_utility(CERTAIN_55, RISK_AVERSE)
        assert eu_gamble == 0.5
        assert eu_certain == 0.6
        assert eu_certain > eu_gamble

    def test_risk_prone_prefers_gamble(self):
        eu_gamble = expected_utility(COIN_FLIP, RISK_PRONE)
        eu_certain = expected_utility(CERTAIN_55, RISK_PRONE)
        assert eu_gamble == 0.5
        assert eu_certain == 0.1
        assert eu_gamble > eu_certain

    def test_degenerate_equals_curve(self):
        assert expected_utility(Lottery.certain(30), RISK_AVERSE) == RISK_AVERSE.evaluate(30)

    @given(
        values=st.lists(st.floats(0, 100), min_size=1, max_size=5),
        alpha=st.floats(0.01, 0.99),
    )
    @settings(max_examples=50, deadline=None)
    def test_mixture_linearity(self, values, alpha):
        curve = AttributeUtility.linear("path_length", 0.0, 120.0)
        l1 = Lottery.uniform(values)
        l2 = Lottery.certain(50)
        mixture = Lottery.of(
            [(v, alpha * p) for v, p in l1.entries]
            + [(v, (1 - alpha) * p) for v, p in l2.entries]
        )
        lhs = expected_utility(mixture, curve)
        rhs = alpha * expected_utility(l1, curve) + (1 - alpha) * expected_utility(l2, curve)
        assert abs(lhs - rhs) <= 1e-9


class TestChooseMaxEu:
    def test_risk_attitude_flips_choice(self):
        choices = [CERTAIN_55, COIN_FLIP]
        averse_idx, averse_eus = choose_max_eu(choices, RISK_AVERSE)
        prone_idx, prone_eus = choose_max_eu(choices, RISK_PRONE)
        assert averse_idx == 0 and averse_eus == [0.6, 0.5]
        assert prone_idx == 1 and prone_eus == [0.1, 0.5]

    def test_single_choice(self):
        idx, _ = choose_max_eu([COIN_FLIP], RISK_AVERSE)
        assert idx == 0

    def test_tie_breaks_to_lowest_index(self):
        curve = AttributeUtility.linear("path_length", 0.0, 100.0)
        choices = [Lottery.certain(70), Lottery.certain(30), Lottery.certain(30)]
        idx, eus = choose_max_eu(choices, curve)
        assert eus == [pytest.approx(0.3), pytest.approx(0.7), pytest.approx(0.7)]
        assert idx == 1

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            choose_max_eu([], RISK_AVERSE)


class TestAttributeUtility:
    def test_bound_forces_zero(self):
        curve = AttributeUtility.linear("time_units", 0.0, 10.0)
        assert curve.evaluate(10.0) == 0.0
        assert curve.evaluate(25.0) == 0.0

    def test_linear_interpolation(self):
        curve = AttributeUtility.linear("path_length", 0.0, 100.0)
        assert curve.evaluate(0) == 1.0
        assert curve.evaluate(25) == pytest.approx(0.75)
        assert curve.evaluate(-5) == 1.0

    def test_free_curve(self):
        curve = AttributeUtility.free("space_units", 10.0)
        assert curve.evaluate(9.99) == 1.0
        assert curve.evaluate(10.0) == 0.0

    def test_must_be_nonincreasing(self):
        with pytest.raises(MalformedModel):
            AttributeUtility("x", ((0.0, 0.5), (1.0, 0.9)), 2.0)

    def test_knots_must_increase(self):
        with pytest.raises(MalformedModel):
            AttributeUtility("x", ((1.0, 1.0), (1.0, 0.5)), 2.0)

    def test_utilities_within_unit_interval(self):
        with pytest.raises(MalformedModel):
            AttributeUtility("x", ((0.0, 1.2),), 1.0)


class TestUtilityModel:
    def test_additive_weights_must_sum_to_one(self):
        curves = (
            AttributeUtility.linear("path_length", 0, 100),
            AttributeUtility.linear("time_units", 0, 10),
        )
        with pytest.raises(MalformedModel):
            UtilityModel(curves, "additive", (0.5, 0.4))

    def test_multiplicative_consistency_enforced(self):
        curves = (
            AttributeUtility.linear("path_length", 0, 100),
            AttributeUtility.linear("time_units", 0, 10),
        )
        with pytest.raises(MalformedModel):
            UtilityModel(curves, "multiplicative", (0.2, 0.3), k=5.0)

    def test_additive_corner_is_exactly_one(self):
        curves = (
            AttributeUtility.linear("path_length", 0, 100),
            AttributeUtility.linear("time_units", 0, 10),
        )
        m = UtilityModel(curves, "additive", (1 / 3, 2 / 3))
        assert joint_utility(Outcome(0, 0, 0), m) == 1.0

    def test_single_attribute_additive_reduces_to_curve(self):
        curve = AttributeUtility.linear("path_length", 0, 100)
        m = UtilityModel((curve,), "additive", (1.0,))
        for v in (0, 10, 37.5, 99):
            assert joint_utility(Outcome(v, 0, 0), m) == pytest.approx(curve.evaluate(v))

    def test_multiplicative_near_zero_k_matches_additive(self):
        curves = (
            AttributeUtility.linear("path_length", 0, 100),
            AttributeUtility.linear("time_units", 0, 10),
        )
        k = 1e-6
        k1 = 0.3
        k2 = ((1 + k) / (1 + k * k1) - 1) / k
        mult = UtilityModel(curves, "multiplicative", (k1, k2), k=k)
        add = UtilityModel(curves, "additive", (0.3, 0.7))
        for o in (Outcome(20, 2, 0), Outcome(50, 5, 0), Outcome(90, 9, 0)):
            assert joint_utility(o, mult) == pytest.approx(joint_utility(o, add), abs=1e-4)

    def test_multilinear_form(self):
        curves = (
            AttributeUtility.linear("path_length", 0, 100),
            AttributeUtility.linear("time_units", 0, 10),
        )
        m = UtilityModel(
            curves,
            "multilinear",
            (0.3, 0.3),
            interactions=((("path_length", "time_units"), 0.4),),
        )
        o = Outcome(50, 5, 0)
        u1, u2 = 0.5, 0.5
        expected = 0.3 * u1 + 0.3 * u2 + 0.4 * u1 * u2
        assert joint_utility(o, m) == pytest.approx(expected)
        assert joint_utility(Outcome(0, 0, 0), m) == 1.0

    def test_multilinear_weights_must_normalize(self):
        curves = (
            AttributeUtility.linear("path_length", 0, 100),
            AttributeUtility.linear("time_units", 0, 10),
        )
        with pytest.raises(MalformedModel):
            UtilityModel(
                curves,
                "multilinear",
                (0.5, 0.5),
                interactions=((("path_length", "time_units"), 0.4),),
            )

    def test_unsolved_scores_zero(self):
        m = default_utility_model()
        assert joint_utility(Outcome(100, 1, 1, solved=False), m) == 0.0

    def test_attribute_missing(self):
        curves = (AttributeUtility.linear("cost_dollars", 0, 10_000),)
        m = UtilityModel(curves, "additive", (1.0,))
        with pytest.raises(AttributeMissing):
            joint_utility(Outcome(1, 1, 1), m)

    def test_extra_attribute_scored(self):
        curves = (AttributeUtility.linear("cost_dollars", 0, 10_000),)
        m = UtilityModel(curves, "additive", (1.0,))
        o = Outcome(1, 1, 1, extra={"cost_dollars": 2500.0})
        assert joint_utility(o, m) == pytest.approx(0.75)


class TestCalibration:
    def test_default_rows_equal_within_tolerance(self):
        m = calibrate_multiplicative(DEFAULT_EQUIVALENCE_ROWS, DEFAULT_BOUNDS)
        scores = [joint_utility(row, m) for row in DEFAULT_EQUIVALENCE_ROWS]
        for a in scores[1:]:
            assert abs(a - scores[0]) < 1e-6

    def test_default_rows_nontrivial_utility(self):
        m = calibrate_multiplicative(DEFAULT_EQUIVALENCE_ROWS, DEFAULT_BOUNDS)
        score = joint_utility(DEFAULT_EQUIVALENCE_ROWS[0], m)
        assert 0.0 < score < 1.0

    def test_corner_exactly_one_and_bounds_exactly_zero(self):
        m = calibrate_multiplicative(DEFAULT_EQUIVALENCE_ROWS, DEFAULT_BOUNDS)
        assert joint_utility(Outcome(0.0, 0.0, 0.0), m) == 1.0
        assert joint_utility(Outcome(20.0, 10.0, 9.0), m) == 0.0
        assert joint_utility(Outcome(100.0, 4.0, 9.0), m) == 0.0
        assert joint_utility(Outcome(20.0, 4.0, 10.0), m) == 0.0

    def test_space_is_free_below_bound(self):
        m = calibrate_multiplicative(DEFAULT_EQUIVALENCE_ROWS, DEFAULT_BOUNDS)
        a = joint_utility(Outcome(20, 8, 0.1), m)
        b = joint_utility(Outcome(20, 8, 9.9), m)
        assert a == b

    def test_identical_rows_calibrate_quickly(self):
        rows = (Outcome(50, 5, 1), Outcome(50, 5, 1))
        m = calibrate_multiplicative(rows, DEFAULT_BOUNDS)
        assert joint_utility(rows[0], m) == joint_utility(rows[1], m)

    def test_monotonicity_conflict_fails(self):
        rows = (Outcome(10, 1, 1), Outcome(10, 9, 1))
        with pytest.raises(CalibrationFailed):
            calibrate_multiplicative(rows, DEFAULT_BOUNDS)

    def test_out_of_bound_row_fails(self):
        rows = (Outcome(120, 5, 1), Outcome(10, 5, 1))
        with pytest.raises(CalibrationFailed):
            calibrate_multiplicative(rows, DEFAULT_BOUNDS)

    def test_needs_two_rows(self):
        with pytest.raises(ValueError):
            calibrate_multiplicative((Outcome(10, 1, 1),), DEFAULT_BOUNDS)

    def test_model_invariants_hold(self):
        m = calibrate_multiplicative(DEFAULT_EQUIVALENCE_ROWS, DEFAULT_BOUNDS)
        assert m.form == "multiplicative"
        assert m.k is not None and m.k > -1.0 and m.k != 0.0
        prod = 1.0
        for w in m.weights:
            prod *= 1.0 + m.k * w
        assert prod == pytest.approx(1.0 + m.k, rel=1e-9)


@st.composite
def solved_outcomes(draw):
    return Outcome(
        path_length=draw(st.floats(0, 99.5)),
        time_units=draw(st.floats(0, 9.95)),
        space_units=draw(st.floats(0, 9.95)),
    )


class TestJointUtilityProperties:
    @given(o=solved_outcomes())
    @settings(max_examples=80, deadline=None)
    def test_range(self, o):
        m = default_utility_model()
        u = joint_utility(o, m)
        assert 0.0 <= u <= 1.0

    @given(o=solved_outcomes(), shrink=st.floats(0.0, 1.0))
    @settings(max_examples=80, deadline=None)
    def test_monotone_improvement(self, o, shrink):
        m = default_utility_model()
        better = Outcome(
            path_length=o.path_length * shrink,
            time_units=o.time_units * shrink,
            space_units=o.space_units,
        )
        assert joint_utility(better, m) >= joint_utility(o, m) - 1e-12

    def test_one_only_at_corner(self):
        m = default_utility_model()
        assert joint_utility(Outcome(0, 0, 0), m) == 1.0
        assert joint_utility(Outcome(0.5, 0, 0), m) < 1.0
        assert joint_utility(Outcome(0, 0.01, 0), m) < 1.0


class TestConfig:
    def test_explicit_weights_round_trip(self):
        data = {
            "form": "additive",
            "attributes": {
                "path_length": {"best": 0, "bound": 100, "curve": "linear"},
                "time_units": {"best": 0, "bound": 10, "curve": "linear"},
            },
            "weights": {"path_length": 0.25, "time_units": 0.75},
        }
        m = utility_model_from_dict(data)
        assert joint_utility(Outcome(0, 0, 0), m) == 1.0
        assert joint_utility(Outcome(50, 5, 0), m) == pytest.approx(
            0.25 * 0.5 + 0.75 * 0.5
        )

    def test_equivalence_rows_trigger_calibration(self):
        data = {
            "attributes": {
                "path_length": {"best": 0, "bound": 100, "curve": "linear"},
                "time_units": {"best": 0, "bound": 10, "curve": "linear"},
                "space_units": {"bound": 10, "curve": "free"},
            },
            "equivalence_rows": [
                {"path_length": 20, "time_units": 8, "space_units": 9},
                {"path_length": 68, "time_units": 6, "space_units": 9},
                {"path_length": 93, "time_units": 4, "space_units": 9},
            ],
        }
        m = utility_model_from_dict(data)
        assert m.form == "multiplicative"
        scores = {joint_utility(Outcome(20, 8, 9), m), joint_utility(Outcome(93, 4, 9), m)}
        assert max(scores) - min(scores) < 1e-6

    def test_yaml_file_load(self, tmp_path):
        import yaml

        path = tmp_path / "utility.yaml"
        data = {
            "form": "additive",
            "attributes": {"path_length": {"best": 0, "bound": 100}},
            "weights": {"path_length": 1.0},
        }
        path.write_text(yaml.safe_dump(data))
        from eusearch.utility import load_utility_config

        m = load_utility_config(str(path))
        assert joint_utility(Outcome(25, 0, 0), m) == pytest.approx(0.75)
