"""Brute-force ground truth for small games.

Enumerates every pure stationary situation, evaluates each one exactly via
the chain module, and scans for a saddle point against all unilateral
deviations. Slow by design; it exists to check the real solver.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import Iterator

from .chain import value_vector
from .errors import BudgetExceededError, NoSaddleFoundError
from .game import Game, Owner, Situation, situation_from_choices

DEFAULT_BUDGET = 20_000


def _situation_count(game: Game, positions) -> int:
    count = 1
    for v in positions:
        count *= len(game.out_arcs[v])
    return count


def enumerate_situations(game: Game, budget: int = DEFAULT_BUDGET) -> Iterator[Situation]:
    """Yield every situation exactly once, in lexicographic arc order."""
    det = game.deterministic_positions
    needed = _situation_count(game, det)
    if needed > budget:
        raise BudgetExceededError(needed, budget)
    for combo in product(*(game.out_arcs[v] for v in det)):
        yield situation_from_choices(game, dict(zip(det, combo)))


@dataclass(frozen=True)
class OracleResult:
    values: tuple[Fraction, ...]
    situation: Situation


def brute_force_solve(game: Game, budget: int = DEFAULT_BUDGET) -> OracleResult:
    """Exhaustively find a situation no unilateral deviation improves on.

    White deviations must not raise any component, Black deviations must not
    lower any; such a situation always exists, so failing to find one is a
    bug (NoSaddleFoundError).
    """
    white = [v for v in game.deterministic_positions if game.owners[v] is Owner.WHITE]
    black = [v for v in game.deterministic_positions if game.owners[v] is Owner.BLACK]
    needed = _situation_count(game, white) * _situation_count(game, black)
    if needed > budget:
        raise BudgetExceededError(needed, budget)

    white_profiles = list(product(*(game.out_arcs[v] for v in white)))
    black_profiles = list(product(*(game.out_arcs[v] for v in black)))
    table: list[list[tuple[Fraction, ...]]] = []
    for wp in white_profiles:
        row = []
        for bp in black_profiles:
            choices = dict(zip(white, wp))
            choices.update(zip(black, bp))
            row.append(value_vector(game, situation_from_choices(game, choices)))
        table.append(row)

    def leq(a, b):
        return all(x <= y for x, y in zip(a, b))

    for wi in range(len(white_profiles)):
        for bi in range(len(black_profiles)):
            mu = table[wi][bi]
            if not all(leq(mu, table[wi][bj]) for bj in range(len(black_profiles))):
                continue
            if not all(leq(table[wj][bi], mu) for wj in range(len(white_profiles))):
                continue
            choices = dict(zip(white, white_profiles[wi]))
            choices.update(zip(black, black_profiles[bi]))
            return OracleResult(mu, situation_from_choices(game, choices))
    raise NoSaddleFoundError("no saddle point among pure stationary situations")
