"""Multiattribute utility: lotteries, attribute curves, joint utility, calibration.

Outcomes are scored per attribute on nonincreasing piecewise-linear curves
(utility 1 at the best value, 0 at a hard bound) and combined additively,
multiplicatively, or multilinearly.  ``calibrate_multiplicative``
reconstructs multiplicative weights from a table of outcomes the user
judges equivalent.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence, Union

import numpy as np

from .minimin import Outcome

PROB_TOLERANCE = 1e-9
_CONSISTENCY_TOL = 1e-7


class InvalidLottery(Exception):
    """Lottery probabilities are nonpositive or do not sum to 1."""


class AttributeMissing(Exception):
    """An outcome lacks an attribute the utility model scores."""


class MalformedModel(Exception):
    """A utility model violates its structural invariants."""


class CalibrationFailed(Exception):
    """No multiplicative model makes the given rows equal in utility."""


@dataclass(frozen=True)
class Lottery:
    """A finite probability distribution over outcomes or scalar values."""

    entries: tuple[tuple[object, float], ...]

    def __post_init__(self) -> None:
        if not self.entries:
            raise InvalidLottery("lottery has no entries")
        total = 0.0
        for _, prob in self.entries:
            if prob <= 0.0:
                raise InvalidLottery(f"nonpositive probability {prob}")
            total += prob
        if abs(total - 1.0) > PROB_TOLERANCE:
            raise InvalidLottery(f"probabilities sum to {total}, not 1")

    @classmethod
    def of(cls, pairs: Iterable[tuple[object, float]]) -> "Lottery":
        return cls(tuple((v, float(p)) for v, p in pairs))

    @classmethod
    def certain(cls, value: object) -> "Lottery":
        return cls(((value, 1.0),))

    @classmethod
    def uniform(cls, values: Sequence[object]) -> "Lottery":
        if not values:
            raise InvalidLottery("uniform lottery over no values")
        p = 1.0 / len(values)
        return cls(tuple((v, p) for v in values))

    @property
    def values(self) -> tuple[object, ...]:
        return tuple(v for v, _ in self.entries)


def expected_value(lot: Lottery) -> float:
    """Probability-weighted mean of a scalar lottery."""
    total = 0.0
    for value, prob in lot.entries:
        if not isinstance(value, (int, float)):
            raise TypeError(f"expected_value needs scalar values, got {value!r}")
        total += prob * value
    return total


@dataclass(frozen=True)
class AttributeUtility:
    """A single attribute's utility curve: nonincreasing, piecewise linear.

    ``points`` are (attribute value, utility) knots sorted by value; queries
    clamp to the end knots.  Any value at or above ``bound`` scores 0
    regardless of the knots.
    """

    attribute: str
    points: tuple[tuple[float, float], ...]
    bound: float

    def __post_init__(self) -> None:
        if not self.points:
            raise MalformedModel(f"{self.attribute}: curve needs at least one knot")
        xs = [x for x, _ in self.points]
        ys = [y for _, y in self.points]
        if any(b <= a for a, b in zip(xs, xs[1:])):
            raise MalformedModel(f"{self.attribute}: knot values must increase")
        if any(b > a for a, b in zip(ys, ys[1:])):
            raise MalformedModel(f"{self.attribute}: curve must be nonincreasing")
        if any(not 0.0 <= y <= 1.0 for y in ys):
            raise MalformedModel(f"{self.attribute}: utilities must lie in [0, 1]")
        if self.bound <= xs[0]:
            raise MalformedModel(f"{self.attribute}: bound must exceed the best value")

    @classmethod
    def linear(cls, attribute: str, best: float, bound: float) -> "AttributeUtility":
        """Utility 1 at ``best`` falling linearly to 0 at ``bound``."""
        return cls(attribute, ((float(best), 1.0), (float(bound), 0.0)), float(bound))

    @classmethod
    def free(cls, attribute: str, bound: float, best: float = 0.0) -> "AttributeUtility":
        """A free but bounded resource: utility 1 below ``bound``, 0 at or above."""
        return cls(attribute, ((float(best), 1.0),), float(bound))

    @property
    def best_value(self) -> float:
        return self.points[0][0]

    def evaluate(self, value: float) -> float:
        if value >= self.bound:
            return 0.0
        pts = self.points
        if value <= pts[0][0]:
            return pts[0][1]
        if value >= pts[-1][0]:
            return pts[-1][1]
        for (x0, y0), (x1, y1) in zip(pts, pts[1:]):
            if value == x1:  # exact knot values, no interpolation round-off
                return y1
            if value < x1:
                return y0 + (y1 - y0) * (value - x0) / (x1 - x0)
        return pts[-1][1]


_FORMS = ("additive", "multiplicative", "multilinear")


@dataclass(frozen=True)
class UtilityModel:
    """Joint utility over outcome attributes.

    ``weights`` align with ``attributes``.  The multiplicative form needs the
    master constant ``k`` satisfying 1 + K = prod(1 + K*k_i); the multilinear
    form needs pairwise ``interactions`` keyed by attribute-name pairs.
    """

    attributes: tuple[AttributeUtility, ...]
    form: str = "additive"
    weights: tuple[float, ...] = ()
    k: float | None = None
    interactions: tuple[tuple[tuple[str, str], float], ...] = ()
    tag: str = ""

    def __post_init__(self) -> None:
        if self.form not in _FORMS:
            raise MalformedModel(f"unknown combination form {self.form!r}")
        if not self.attributes:
            raise MalformedModel("utility model needs at least one attribute")
        names = [a.attribute for a in self.attributes]
        if len(set(names)) != len(names):
            raise MalformedModel("duplicate attribute names")
        if len(self.weights) != len(self.attributes):
            raise MalformedModel("one weight per attribute required")
        if any(w < 0 for w in self.weights):
            raise MalformedModel("weights must be nonnegative")
        if self.form == "additive":
            if abs(sum(self.weights) - 1.0) > _CONSISTENCY_TOL:
                raise MalformedModel("additive weights must sum to 1")
        elif self.form == "multiplicative":
            if self.k is None or self.k <= -1.0 or self.k == 0.0:
                raise MalformedModel("multiplicative form needs K > -1, K != 0")
            prod = 1.0
            for w in self.weights:
                prod *= 1.0 + self.k * w
            if abs(prod - (1.0 + self.k)) > _CONSISTENCY_TOL * max(1.0, abs(self.k)):
                raise MalformedModel(
                    "multiplicative weights violate 1 + K = prod(1 + K*k_i)"
                )
        else:  # multilinear
            known = set(names)
            for (a, b), _ in self.interactions:
                if a not in known or b not in known or a == b:
                    raise MalformedModel(f"bad interaction pair ({a}, {b})")
            total = sum(self.weights) + sum(k for _, k in self.interactions)
            if abs(total - 1.0) > _CONSISTENCY_TOL:
                raise MalformedModel(
                    "multilinear weights plus interactions must sum to 1"
                )

    def attribute_names(self) -> tuple[str, ...]:
        return tuple(a.attribute for a in self.attributes)

    def _raw(self, utilities: Sequence[float]) -> float:
        if self.form == "additive":
            return sum(w * u for w, u in zip(self.weights, utilities))
        if self.form == "multiplicative":
            prod = 1.0
            for w, u in zip(self.weights, utilities):
                prod *= 1.0 + self.k * w * u
            return prod - 1.0
        by_name = dict(zip(self.attribute_names(), utilities))
        total = sum(w * u for w, u in zip(self.weights, utilities))
        for (a, b), kij in self.interactions:
            total += kij * by_name[a] * by_name[b]
        return total

    def combine(self, utilities: Sequence[float]) -> float:
        """Combine per-attribute utilities; exactly 1.0 at the all-best corner."""
        numerator = self._raw(utilities)
        denominator = self._raw([1.0] * len(self.attributes))
        value = numerator / denominator
        return min(1.0, max(0.0, value))


def attribute_value(outcome: Outcome, name: str) -> float:
    """Look up an attribute on an outcome, checking ``extra`` for custom ones."""
    if name in ("path_length", "time_units", "space_units"):
        return getattr(outcome, name)
    value = outcome.extra_value(name)
    if value is None:
        raise AttributeMissing(f"outcome has no attribute {name!r}")
    return value


def joint_utility(o: Outcome, m: UtilityModel) -> float:
    """Joint utility of an outcome: 0 if unsolved or any attribute hits its bound."""
    if not o.solved:
        return 0.0
    utilities = []
    for attr in m.attributes:
        value = attribute_value(o, attr.attribute)
        if value >= attr.bound:
            return 0.0
        utilities.append(attr.evaluate(value))
    return m.combine(utilities)


UtilityLike = Union[UtilityModel, AttributeUtility]


def _score(value: object, u: UtilityLike) -> float:
    if isinstance(u, UtilityModel):
        if not isinstance(value, Outcome):
            raise TypeError(f"UtilityModel scores Outcomes, got {value!r}")
        return joint_utility(value, u)
    if isinstance(value, Outcome):
        return u.evaluate(attribute_value(value, u.attribute))
    return u.evaluate(float(value))  # type: ignore[arg-type]


def expected_utility(lot: Lottery, u: UtilityLike) -> float:
    """Probability-weighted utility of a lottery, in [0, 1]."""
    return sum(prob * _score(value, u) for value, prob in lot.entries)


def choose_max_eu(
    choices: Sequence[Lottery], u: UtilityLike
) -> tuple[int, list[float]]:
    """Index of the maximum-EU lottery (ties to the lowest index) plus all EUs."""
    if not choices:
        raise ValueError("choose_max_eu needs at least one lottery")
    eus = [expected_utility(lot, u) for lot in choices]
    best = 0
    for i, eu in enumerate(eus):
        if eu > eus[best]:
            best = i
    return best, eus


# --- multiplicative calibration -------------------------------------------

DEFAULT_BOUNDS: Mapping[str, float] = {
    "path_length": 100.0,
    "time_units": 10.0,
    "space_units": 10.0,
}

# Shipped hypothetical workload: three solutions judged equally desirable
# (moves, minutes, megabytes), used to pin the default model's weights.
DEFAULT_EQUIVALENCE_ROWS: tuple[Outcome, ...] = (
    Outcome(path_length=20.0, time_units=8.0, space_units=9.0),
    Outcome(path_length=68.0, time_units=6.0, space_units=9.0),
    Outcome(path_length=93.0, time_units=4.0, space_units=9.0),
)


def _calibration_curves(bounds: Mapping[str, float]) -> tuple[AttributeUtility, ...]:
    for name in ("path_length", "time_units", "space_units"):
        if name not in bounds:
            raise ValueError(f"bounds must include {name!r}")
    return (
        AttributeUtility.linear("path_length", 0.0, bounds["path_length"]),
        AttributeUtility.linear("time_units", 0.0, bounds["time_units"]),
        AttributeUtility.free("space_units", bounds["space_units"]),
    )


def calibrate_multiplicative(
    equivalence_rows: Sequence[Outcome],
    bounds: Mapping[str, float] = DEFAULT_BOUNDS,
    variance_floor: float = 1e-12,
) -> UtilityModel:
    """Fit a multiplicative model that scores the given rows equally.

    Attribute curves are linear from best value to bound for moves and time;
    space is free but bounded (weight 0).  Solves for k_path, k_time, and the
    master constant K: for a trial K, the row-equality equations plus the
    consistency constraint are linear in (A, B, C) = (K*k_p, K*k_t, K^2*k_p*k_t)
    and solved by least squares; the leftover coupling residual A*B - C is
    driven to zero by bisection on K.
    """
    if len(equivalence_rows) < 2:
        raise ValueError("calibration needs at least two equivalence rows")
    curves = _calibration_curves(bounds)
    path_curve, time_curve, space_curve = curves
    up = []
    ut = []
    for row in equivalence_rows:
        for curve in curves:
            if attribute_value(row, curve.attribute) >= curve.bound:
                raise CalibrationFailed(
                    f"row {row} violates the {curve.attribute} bound"
                )
        up.append(path_curve.evaluate(row.path_length))
        ut.append(time_curve.evaluate(row.time_units))

    # Row-equality differences; unknown vector is (A, B, C).
    diff_rows = []
    for j in range(len(up) - 1):
        diff_rows.append(
            [up[j] - up[j + 1], ut[j] - ut[j + 1], up[j] * ut[j] - up[j + 1] * ut[j + 1]]
        )
    diff = np.array(diff_rows, dtype=float)
    consistency = np.ones((1, 3))
    matrix = np.vstack([diff, consistency])

    def solve_for(k: float) -> np.ndarray:
        rhs = np.zeros(len(matrix))
        rhs[-1] = k
        solution, *_ = np.linalg.lstsq(matrix, rhs, rcond=None)
        return solution

    def coupling(k: float) -> float:
        a, b, c = solve_for(k)
        return a * b - c

    def candidate(k: float) -> UtilityModel | None:
        a, b, _ = solve_for(k)
        k_path, k_time = float(a / k), float(b / k)
        if not (0.0 < k_path <= 1.0 and 0.0 < k_time <= 1.0):
            return None
        # Re-derive K from the recovered weights so the consistency invariant
        # holds to machine precision: 1 + K = (1 + K*k_p)(1 + K*k_t) gives
        # K = (1 - k_p - k_t) / (k_p * k_t).
        k_exact = (1.0 - k_path - k_time) / (k_path * k_time)
        if k_exact <= -1.0 or k_exact == 0.0:
            return None
        try:
            return UtilityModel(
                attributes=curves,
                form="multiplicative",
                weights=(k_path, k_time, 0.0),
                k=k_exact,
                tag="multiplicative-calibrated",
            )
        except MalformedModel:
            return None

    def row_variance(model: UtilityModel) -> float:
        scores = [joint_utility(row, model) for row in equivalence_rows]
        return float(np.var(scores))

    # Bracket sign changes of the coupling residual on both sides of K = 0
    # (K = 0 itself is the degenerate additive root and is excluded).
    negatives = sorted(-(10.0 ** (-4 + 4 * i / 80)) for i in range(81))
    grid: list[float] = [k for k in negatives if k > -0.999]
    grid += [10.0 ** (-4 + 8 * i / 160) for i in range(161)]

    solutions: list[tuple[float, float, UtilityModel]] = []
    previous = None
    for k in grid:
        s = coupling(k)
        if previous is not None and previous[0] * k > 0:
            k0, s0 = previous
            if s0 == 0.0:
                root = k0
            elif s0 * s < 0:
                lo, hi, slo = k0, k, s0
                for _ in range(200):
                    mid = 0.5 * (lo + hi)
                    sm = coupling(mid)
                    if sm == 0.0:
                        lo = hi = mid
                        break
                    if slo * sm < 0:
                        hi = mid
                    else:
                        lo, slo = mid, sm
                root = 0.5 * (lo + hi)
            else:
                previous = (k, s)
                continue
            model = candidate(root)
            if model is not None:
                var = row_variance(model)
                if var < variance_floor:
                    solutions.append((var, abs(model.k), model))
        previous = (k, s)

    if not solutions:
        raise CalibrationFailed(
            "rows are inconsistent with a multiplicative utility "
            f"(no solution reached variance < {variance_floor})"
        )
    solutions.sort(key=lambda item: (item[0], item[1]))
    return solutions[0][2]


def default_utility_model() -> UtilityModel:
    """The shipped model: calibrated on the default equivalence rows."""
    return calibrate_multiplicative(DEFAULT_EQUIVALENCE_ROWS, DEFAULT_BOUNDS)


# --- config files -----------------------------------------------------------


def utility_model_from_dict(data: Mapping) -> UtilityModel:
    """Build a model from config data (see the shipped YAML for the schema).

    ``attributes`` maps attribute name to a block with ``bound`` plus either
    ``curve: linear`` (with ``best``) or ``curve: free``, or explicit
    ``points``.  If ``equivalence_rows`` is present the multiplicative model
    is calibrated from them and any weights in the file are ignored.
    """
    rows = data.get("equivalence_rows")
    if rows:
        bounds = {
            name: float(block["bound"])
            for name, block in data.get("attributes", {}).items()
        } or dict(DEFAULT_BOUNDS)
        outcomes = [
            Outcome(
                path_length=float(r["path_length"]),
                time_units=float(r["time_units"]),
                space_units=float(r.get("space_units", 0.0)),
            )
            for r in rows
        ]
        return calibrate_multiplicative(outcomes, bounds)

    attributes = []
    for name, block in data["attributes"].items():
        bound = float(block["bound"])
        curve = block.get("curve", "linear")
        if "points" in block:
            pts = tuple((float(x), float(y)) for x, y in block["points"])
            attributes.append(AttributeUtility(name, pts, bound))
        elif curve == "free":
            attributes.append(
                AttributeUtility.free(name, bound, best=float(block.get("best", 0.0)))
            )
        elif curve == "linear":
            attributes.append(
                AttributeUtility.linear(name, float(block.get("best", 0.0)), bound)
            )
        else:
            raise MalformedModel(f"unknown curve kind {curve!r} for {name}")
    names = [a.attribute for a in attributes]
    weight_map = data.get("weights", {})
    weights = tuple(float(weight_map.get(n, 0.0)) for n in names)
    interactions = tuple(
        (tuple(key.split("*", 1)), float(v))
        for key, v in data.get("interactions", {}).items()
    )
    return UtilityModel(
        attributes=tuple(attributes),
        form=data.get("form", "additive"),
        weights=weights,
        k=float(data["master_k"]) if "master_k" in data else None,
        interactions=interactions,  # type: ignore[arg-type]
        tag=str(data.get("tag", "")),
    )


def load_utility_config(path: str) -> UtilityModel:
    """Load a utility model from a YAML config file."""
    import yaml

    with open(path, "r", encoding="utf-8") as fh:
        return utility_model_from_dict(yaml.safe_load(fh))
