"""Interval structure of deterministic games with one parametric self-loop.

The loop position w can never be left once entered, so every position's value
as a function of the loop reward x is clamp(x, lam1, lam2): constant at lam1
left of its tracking interval, equal to x inside it, constant at lam2 to the
right. Both endpoints are values of ordinary games (at x = -R and x = +R) and
are computed exactly. Sorting all endpoints splits the sweep [-R, R] into at
most 2n+1 intervals on whose interior the below/tracking/above classification
of every position is constant.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .bw import solve_bw
from .ergodic import PumpStats
from .errors import InvariantViolationError
from .game import Game, ParamBWGame, parametrize_bw

ZERO = Fraction(0)


def solve_at(pg: ParamBWGame, x: Fraction, strict: bool = False,
             stats: PumpStats | None = None) -> tuple[Fraction, ...]:
    """Exact values of the instantiated game at parameter x, unscaled."""
    inst = pg.instantiate(Fraction(x))
    sol = solve_bw(inst.game, strict=strict, verify=False, stats=stats)
    return tuple(v / inst.scale for v in sol.values)


def position_interval(pg: ParamBWGame, v: int, radius: Fraction,
                      strict: bool = False) -> tuple[Fraction, Fraction]:
    """The tracking interval (lam1, lam2) of one position: its values at the
    two ends of the sweep."""
    lam1 = solve_at(pg, -Fraction(radius), strict)
    lam2 = solve_at(pg, Fraction(radius), strict)
    return lam1[v], lam2[v]


@dataclass(frozen=True)
class IntervalSlice:
    lo: Fraction
    hi: Fraction
    below: frozenset[int]  # value saturated at lam2 <= lo
    tracking: frozenset[int]  # value equal to x on the whole slice
    above: frozenset[int]  # value saturated at lam1 >= hi


@dataclass(frozen=True)
class IntervalStructure:
    radius: Fraction
    lam1: tuple[Fraction, ...]
    lam2: tuple[Fraction, ...]
    breakpoints: tuple[Fraction, ...]
    slices: tuple[IntervalSlice, ...]

    def value_at(self, v: int, x: Fraction) -> Fraction:
        """clamp(x, lam1, lam2); valid for x within the sweep."""
        return min(max(Fraction(x), self.lam1[v]), self.lam2[v])


def find_intervals(pg: ParamBWGame, radius: Fraction, strict: bool = False,
                   stats: PumpStats | None = None) -> IntervalStructure:
    radius = Fraction(radius)
    lam1 = solve_at(pg, -radius, strict, stats)
    lam2 = solve_at(pg, radius, strict, stats)
    n = pg.base.n
    for v in range(n):
        if not (-radius <= lam1[v] <= lam2[v] <= radius):
            raise InvariantViolationError("interval endpoints escape the sweep")
    breakpoints = sorted(set(lam1) | set(lam2) | {-radius, radius})
    slices = []
    for lo, hi in zip(breakpoints, breakpoints[1:]):
        tracking = frozenset(v for v in range(n) if lam1[v] <= lo and lam2[v] >= hi)
        below = frozenset(v for v in range(n) if lam2[v] <= lo) - tracking
        above = frozenset(v for v in range(n) if lam1[v] >= hi) - tracking
        if len(below) + len(tracking) + len(above) != n:
            raise InvariantViolationError("slice classification does not partition")
        slices.append(IntervalSlice(lo, hi, below, tracking, above))
    if len(slices) > 2 * n + 1:
        raise InvariantViolationError("more than 2n+1 parameter intervals")
    return IntervalStructure(radius, lam1, lam2, tuple(breakpoints), tuple(slices))
