"""Solver for games without random positions.

Values of such games are cycle means, found here by repeatedly extracting the
class of maximal value with the pumping machinery (accuracy 1/(n^2+1), below
the least gap between distinct cycle means) and peeling it off. The
concatenated per-class strategies form a uniformly optimal situation, which
is verified exactly before returning.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .chain import verify_saddle_point
from .ergodic import PumpStats, find_top
from .errors import InvariantViolationError
from .game import Game, Situation, restrict, situation_from_choices, validate


@dataclass(frozen=True)
class BwSolution:
    values: tuple[Fraction, ...]
    situation: Situation


def solve_bw(
    game: Game,
    strict: bool = False,
    verify: bool = True,
    stats: PumpStats | None = None,
) -> BwSolution:
    """Exact values and a uniformly optimal situation of a deterministic game."""
    params = validate(game)
    if params.k != 0:
        raise ValueError("solve_bw requires a game without random positions")

    values: dict[int, Fraction] = {}
    choices: dict[int, int] = {}
    # Maps from the current peeled game back to the original.
    pos_map = list(range(game.n))
    arc_map = list(range(len(game.arcs)))
    current = game
    while True:
        top = find_top(current, strict=strict, stats=stats)
        for v in top.positions:
            values[pos_map[v]] = top.value
        for v, a in top.choices.items():
            choices[pos_map[v]] = arc_map[a]
        rest = [v for v in current.positions if v not in top.positions]
        if not rest:
            break
        restriction = restrict(current, rest)
        pos_map = [pos_map[v] for v in restriction.kept]
        arc_map = [arc_map[a] for a in restriction.arc_map]
        current = restriction.game

    situation = situation_from_choices(game, choices)
    value_tuple = tuple(values[v] for v in game.positions)
    if verify:
        report = verify_saddle_point(game, situation)
        if not report.ok or report.values != value_tuple:
            raise InvariantViolationError("peeled situation failed verification")
    return BwSolution(value_tuple, situation)
