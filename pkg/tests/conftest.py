from __future__ import annotations

from fractions import Fraction

import pytest

from bwrsolve.game import make_game


@pytest.fixture
def loop_game():
    """Single White position with a self-loop of reward 5."""
    return make_game([("a", "W")], [("a", "a", 5)])


@pytest.fixture
def two_loops():
    """Disjoint White loop (reward 1) and Black loop (reward 0)."""
    return make_game(
        [("w", "W"), ("b", "B")],
        [("w", "w", 1), ("b", "b", 0)],
    )


def frac(a, b=1) -> Fraction:
    return Fraction(a, b)
