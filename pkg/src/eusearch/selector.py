"""Expected-utility selection of lookahead levels and whole algorithms."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

from .minimin import Outcome
from .perfmodel import EmpiricalTable, MarkovParams, predict
from .utility import Lottery, UtilityModel, expected_utility


@dataclass(frozen=True)
class SelectionReport:
    """The chosen lookahead level plus the expected utility of every candidate."""

    chosen_level: int
    eu_by_level: Mapping[int, float]
    model_id: str = ""
    utility_id: str = ""

    def __post_init__(self) -> None:
        best = max(self.eu_by_level.values())
        if self.eu_by_level[self.chosen_level] != best:
            raise ValueError("chosen level does not attain the maximum EU")


def _model_tag(model: MarkovParams | EmpiricalTable) -> str:
    if isinstance(model, MarkovParams):
        levels = model.levels
        return f"markov[levels {levels[0]}..{levels[-1]}]"
    levels = model.levels
    return f"empirical[levels {levels[0]}..{levels[-1]}]"


def select_lookahead(
    d: int,
    model: MarkovParams | EmpiricalTable,
    u: UtilityModel,
    levels: Sequence[int],
    samples: int = 10_000,
    seed: int = 0,
    extrapolate: bool = False,
    convert: Callable[[Outcome], Outcome] | None = None,
) -> SelectionReport:
    """Pick the level maximizing expected utility at depth ``d``.

    Ties break toward the smaller level (cheaper decisions at equal EU).  The
    same seed is used for every level so Markov predictions are coupled.
    ``convert`` maps predicted outcomes into the utility model's units (e.g.
    node generations to minutes) before scoring; default is identity.
    """
    if not levels:
        raise ValueError("select_lookahead needs at least one level")
    eu_by_level: dict[int, float] = {}
    for level in sorted(levels):
        lottery = predict(
            model, d, level, samples=samples, seed=seed, extrapolate=extrapolate
        )
        if convert is not None:
            lottery = Lottery.of((convert(o), p) for o, p in lottery.entries)
        eu_by_level[level] = expected_utility(lottery, u)
    chosen = None
    for level, eu in eu_by_level.items():
        if chosen is None or eu > eu_by_level[chosen]:
            chosen = level
    return SelectionReport(
        chosen_level=chosen,
        eu_by_level=eu_by_level,
        model_id=_model_tag(model),
        utility_id=u.tag or u.form,
    )


def compare_algorithms(
    candidates: Sequence[tuple[str, Lottery]],
    u: UtilityModel,
) -> tuple[str, list[tuple[str, float]]]:
    """Choose among whole algorithms by the expected utility of their outcomes.

    Returns the winning label (first-listed wins ties) and the full EU table
    in input order.
    """
    if not candidates:
        raise ValueError("compare_algorithms needs at least one candidate")
    table = [(label, expected_utility(lottery, u)) for label, lottery in candidates]
    best_label, best_eu = table[0]
    for label, eu in table[1:]:
        if eu > best_eu:
            best_label, best_eu = label, eu
    return best_label, table
