"""Game representation and the structural operations on it.

A game is a digraph whose positions are owned by White (maximizer), Black
(minimizer), or Random (nature). Arcs carry exact rational rewards; arcs out
of random positions additionally carry positive rational probabilities summing
to one. Loops and parallel arcs are allowed; arcs are identified by their
index, and every tie-break in the library is by (successor index, arc index)
so results are reproducible.

All values here are immutable after construction and every operation is a pure
function, so games can be shared freely across threads.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from math import lcm
from typing import Iterable, Mapping, Sequence

from .errors import (
    BadProbabilitySumError,
    EmptyOutDegreeError,
    GameValidationError,
    NonPositiveProbabilityError,
    TerminalPositionError,
)

ZERO = Fraction(0)
ONE = Fraction(1)


class Owner(enum.Enum):
    WHITE = "W"
    BLACK = "B"
    RANDOM = "R"

    @property
    def deterministic(self) -> bool:
        return self is not Owner.RANDOM


@dataclass(frozen=True)
class Arc:
    source: int
    target: int
    reward: Fraction
    prob: Fraction | None = None


@dataclass(frozen=True)
class Game:
    """A game graph. Construction does not validate; see :func:`validate`."""

    owners: tuple[Owner, ...]
    arcs: tuple[Arc, ...]
    names: tuple[str, ...]

    @property
    def n(self) -> int:
        return len(self.owners)

    @cached_property
    def out_arcs(self) -> tuple[tuple[int, ...], ...]:
        """Arc indices leaving each position, in arc order."""
        out: list[list[int]] = [[] for _ in range(self.n)]
        for i, arc in enumerate(self.arcs):
            out[arc.source].append(i)
        return tuple(tuple(a) for a in out)

    @cached_property
    def positions(self) -> range:
        return range(self.n)

    @cached_property
    def random_positions(self) -> tuple[int, ...]:
        return tuple(v for v in self.positions if self.owners[v] is Owner.RANDOM)

    @cached_property
    def deterministic_positions(self) -> tuple[int, ...]:
        return tuple(v for v in self.positions if self.owners[v].deterministic)

    def owner(self, v: int) -> Owner:
        return self.owners[v]

    def name(self, v: int) -> str:
        return self.names[v]


def make_game(
    positions: Sequence[tuple[str, str | Owner]],
    arcs: Iterable[tuple],
) -> Game:
    """Build a game from readable specs.

    ``positions`` is a sequence of (name, owner) pairs; ``arcs`` yields
    (source, target, reward) or (source, target, reward, prob) tuples where
    source/target may be names or indices and reward/prob anything Fraction
    accepts.
    """
    names = tuple(name for name, _ in positions)
    index = {name: i for i, name in enumerate(names)}
    if len(index) != len(names):
        raise GameValidationError("duplicate position names")
    owners = tuple(o if isinstance(o, Owner) else Owner(o) for _, o in positions)

    def resolve(p) -> int:
        return p if isinstance(p, int) else index[p]

    built = []
    for spec in arcs:
        src, dst, reward = spec[0], spec[1], Fraction(spec[2])
        prob = Fraction(spec[3]) if len(spec) > 3 and spec[3] is not None else None
        built.append(Arc(resolve(src), resolve(dst), reward, prob))
    return Game(owners, tuple(built), names)


@dataclass(frozen=True)
class GameParams:
    """Quantities derived from a validated game."""

    n: int
    k: int
    denominator: int  # least common denominator of all transition probabilities
    max_abs_reward: Fraction
    reward_range: Fraction
    theta: Fraction  # smallest positive transition probability


def validate(game: Game) -> GameParams:
    """Check the structural invariants and derive the game parameters."""
    if game.n == 0:
        raise GameValidationError("game has no positions")
    denom = 1
    theta = ONE
    for v in game.positions:
        out = game.out_arcs[v]
        if not out:
            raise TerminalPositionError(v)
        if game.owners[v] is Owner.RANDOM:
            total = ZERO
            for i in out:
                p = game.arcs[i].prob
                if p is None or p <= 0:
                    raise NonPositiveProbabilityError(v, f"arc {i}")
                total += p
                denom = lcm(denom, p.denominator)
                if p < theta:
                    theta = p
            if total != 1:
                raise BadProbabilitySumError(v, total)
        else:
            for i in out:
                if game.arcs[i].prob is not None:
                    raise GameValidationError(
                        f"deterministic position {v} carries a probability on arc {i}"
                    )
    rewards = [arc.reward for arc in game.arcs]
    return GameParams(
        n=game.n,
        k=len(game.random_positions),
        denominator=denom,
        max_abs_reward=max(abs(r) for r in rewards),
        reward_range=max(rewards) - min(rewards),
        theta=theta,
    )


def has_integral_rewards(game: Game) -> bool:
    return all(arc.reward.denominator == 1 for arc in game.arcs)


# --- potentials ------------------------------------------------------------

Potential = tuple[Fraction, ...]


def zero_potential(game: Game) -> Potential:
    return (ZERO,) * game.n


def as_potential(game: Game, x: Mapping[int, Fraction] | Sequence[Fraction]) -> Potential:
    if isinstance(x, Mapping):
        return tuple(Fraction(x.get(v, 0)) for v in game.positions)
    if len(x) != game.n:
        raise ValueError("potential length does not match position count")
    return tuple(Fraction(f) for f in x)


def transform_rewards(game: Game, x: Potential) -> tuple[Fraction, ...]:
    """Rewards rewritten as r(v,u) + x(v) - x(u), indexed by arc."""
    return tuple(arc.reward + x[arc.source] - x[arc.target] for arc in game.arcs)


@dataclass(frozen=True)
class LocalValues:
    """Per-position best transformed reward: max / min / expectation by owner."""

    m: tuple[Fraction, ...]
    low: Fraction
    high: Fraction

    @property
    def spread(self) -> Fraction:
        return self.high - self.low


def local_values_from(game: Game, rx: Sequence[Fraction]) -> LocalValues:
    m: list[Fraction] = []
    for v in game.positions:
        out = game.out_arcs[v]
        owner = game.owners[v]
        if owner is Owner.WHITE:
            m.append(max(rx[i] for i in out))
        elif owner is Owner.BLACK:
            m.append(min(rx[i] for i in out))
        else:
            m.append(sum((game.arcs[i].prob * rx[i] for i in out), ZERO))
    return LocalValues(tuple(m), min(m), max(m))


def local_values(game: Game, x: Potential) -> LocalValues:
    return local_values_from(game, transform_rewards(game, x))


# --- situations ------------------------------------------------------------


@dataclass(frozen=True)
class Situation:
    """A pure stationary strategy pair: one chosen arc per deterministic position.

    ``choices[v]`` is an arc index for deterministic v and None for random v.
    """

    choices: tuple[int | None, ...]

    def arc(self, v: int) -> int:
        a = self.choices[v]
        if a is None:
            raise ValueError(f"position {v} is random")
        return a

    def successor(self, game: Game, v: int) -> int:
        return game.arcs[self.arc(v)].target

    def white_map(self, game: Game) -> dict[int, int]:
        return {
            v: game.arcs[self.choices[v]].target
            for v in game.positions
            if game.owners[v] is Owner.WHITE
        }

    def black_map(self, game: Game) -> dict[int, int]:
        return {
            v: game.arcs[self.choices[v]].target
            for v in game.positions
            if game.owners[v] is Owner.BLACK
        }


def situation_from_choices(game: Game, choices: Mapping[int, int]) -> Situation:
    """Build a situation from {position: arc index} over deterministic positions."""
    out: list[int | None] = [None] * game.n
    for v in game.deterministic_positions:
        if v not in choices:
            raise ValueError(f"no choice for deterministic position {v}")
        a = choices[v]
        if game.arcs[a].source != v:
            raise ValueError(f"arc {a} does not leave position {v}")
        out[v] = a
    return Situation(tuple(out))


def situation_from_successors(game: Game, succ: Mapping[int, int]) -> Situation:
    """Build a situation from successor choices, taking the lowest-index arc."""
    choices: dict[int, int] = {}
    for v in game.deterministic_positions:
        u = succ[v]
        arc = next((i for i in game.out_arcs[v] if game.arcs[i].target == u), None)
        if arc is None:
            raise ValueError(f"no arc from {v} to {u}")
        choices[v] = arc
    return situation_from_choices(game, choices)


def extract_locally_optimal_situation(game: Game, x: Potential) -> Situation:
    """Pick, per deterministic position, an arc attaining its local value.

    Ties break by lowest successor index, then lowest arc index.
    """
    rx = transform_rewards(game, x)
    choices: dict[int, int] = {}
    for v in game.deterministic_positions:
        out = game.out_arcs[v]
        if game.owners[v] is Owner.WHITE:
            best = max(rx[i] for i in out)
        else:
            best = min(rx[i] for i in out)
        choices[v] = min(
            (i for i in out if rx[i] == best),
            key=lambda i: (game.arcs[i].target, i),
        )
    return situation_from_choices(game, choices)


# --- canonical form --------------------------------------------------------


@dataclass(frozen=True)
class CanonicalReport:
    ok: bool
    value_violations: tuple[tuple[int, str], ...]  # (position, what failed)
    move_violations: tuple[int, ...]  # arc indices breaking global optimality

    def __bool__(self) -> bool:
        return self.ok


def check_canonical_form(game: Game, x: Potential, mu: Sequence[Fraction]) -> CanonicalReport:
    """Check whether (x, mu) witnesses canonical form.

    Requires mu to equal both the one-step best of mu itself and the local
    values of the transformed rewards at every position, and every locally
    optimal deterministic arc to connect positions of equal mu.
    """
    mu = [Fraction(m) for m in mu]
    rx = transform_rewards(game, x)
    lv = local_values_from(game, rx)
    value_violations: list[tuple[int, str]] = []
    move_violations: list[int] = []
    for v in game.positions:
        out = game.out_arcs[v]
        owner = game.owners[v]
        if owner is Owner.WHITE:
            m_mu = max(mu[game.arcs[i].target] for i in out)
        elif owner is Owner.BLACK:
            m_mu = min(mu[game.arcs[i].target] for i in out)
        else:
            m_mu = sum((game.arcs[i].prob * mu[game.arcs[i].target] for i in out), ZERO)
        if mu[v] != m_mu:
            value_violations.append((v, "mu is not one-step optimal"))
        if mu[v] != lv.m[v]:
            value_violations.append((v, "mu differs from the local value"))
    for i, arc in enumerate(game.arcs):
        if game.owners[arc.source].deterministic and rx[i] == mu[arc.source]:
            if mu[arc.source] != mu[arc.target]:
                move_violations.append(i)
    ok = not value_violations and not move_violations
    return CanonicalReport(ok, tuple(value_violations), tuple(move_violations))


# --- closures ---------------------------------------------------------------


@dataclass(frozen=True)
class Closure:
    members: frozenset[int]
    forcing: dict[int, int] = field(hash=False, default_factory=dict)
    """Arc choices by which the forcing player enters the seed set."""


def _closure(game: Game, seed: Iterable[int], some: frozenset[Owner], all_: frozenset[Owner]) -> Closure:
    members = set(seed)
    forcing: dict[int, int] = {}
    changed = True
    while changed:
        changed = False
        for v in game.positions:
            if v in members:
                continue
            out = game.out_arcs[v]
            owner = game.owners[v]
            if owner in some:
                arc = next((i for i in out if game.arcs[i].target in members), None)
                if arc is not None:
                    members.add(v)
                    if owner.deterministic:
                        forcing[v] = arc
                    changed = True
            elif owner in all_:
                if all(game.arcs[i].target in members for i in out):
                    members.add(v)
                    changed = True
    return Closure(frozenset(members), forcing)


def black_closure(game: Game, seed: Iterable[int]) -> Closure:
    """Positions from which Black forces entry into the seed with probability 1."""
    return _closure(game, seed, frozenset({Owner.BLACK}), frozenset({Owner.WHITE, Owner.RANDOM}))


def black_semi_closure(game: Game, seed: Iterable[int]) -> Closure:
    """Positions from which Black forces entry with positive probability."""
    return _closure(game, seed, frozenset({Owner.BLACK, Owner.RANDOM}), frozenset({Owner.WHITE}))


def white_closure(game: Game, seed: Iterable[int]) -> Closure:
    return _closure(game, seed, frozenset({Owner.WHITE}), frozenset({Owner.BLACK, Owner.RANDOM}))


def white_semi_closure(game: Game, seed: Iterable[int]) -> Closure:
    return _closure(game, seed, frozenset({Owner.WHITE, Owner.RANDOM}), frozenset({Owner.BLACK}))


# --- restrictions and parametrized games ------------------------------------


@dataclass(frozen=True)
class Restriction:
    """A game induced on a position subset, with maps back to the parent.

    Random rows may be sub-stochastic here (mass on deleted arcs is simply
    gone); validate() will reject such a game, and parametrize_bwr is the
    operation that restores stochasticity.
    """

    game: Game
    kept: tuple[int, ...]  # new index -> parent index
    arc_map: tuple[int, ...]  # new arc index -> parent arc index

    @cached_property
    def index_of(self) -> dict[int, int]:
        return {orig: new for new, orig in enumerate(self.kept)}

    def lift_positions(self, positions: Iterable[int]) -> frozenset[int]:
        return frozenset(self.kept[v] for v in positions)

    def lift_choices(self, choices: Mapping[int, int]) -> dict[int, int]:
        return {self.kept[v]: self.arc_map[a] for v, a in choices.items()}


def restrict(game: Game, keep: Iterable[int]) -> Restriction:
    """Delete positions outside ``keep`` and every crossing arc.

    Raises EmptyOutDegreeError if a deterministic position loses all arcs.
    Random positions may lose probability mass; the result is then only a
    partial game (see Restriction).
    """
    kept = tuple(sorted(set(keep)))
    keep_set = set(kept)
    index = {orig: new for new, orig in enumerate(kept)}
    arcs: list[Arc] = []
    arc_map: list[int] = []
    for i, arc in enumerate(game.arcs):
        if arc.source in keep_set and arc.target in keep_set:
            arcs.append(Arc(index[arc.source], index[arc.target], arc.reward, arc.prob))
            arc_map.append(i)
    sub = Game(
        tuple(game.owners[v] for v in kept),
        tuple(arcs),
        tuple(game.names[v] for v in kept),
    )
    for v in range(sub.n):
        if sub.owners[v].deterministic and not sub.out_arcs[v]:
            raise EmptyOutDegreeError(kept[v])
    return Restriction(sub, kept, tuple(arc_map))


@dataclass(frozen=True)
class BwrInstance:
    """A restriction closed off with a parameter loop, rewards scaled integral.

    Values of ``game`` are ``scale`` times the values of the unscaled
    parametrized game; ``w`` is the index of the loop position.
    """

    game: Game
    scale: int
    w: int
    kept: tuple[int, ...]
    arc_map: dict[int, int]  # instance arc index -> parent arc index (real arcs only)

    def unscale(self, value: Fraction) -> Fraction:
        return value / self.scale

    def lift_choices(self, choices: Mapping[int, int]) -> dict[int, int]:
        """Map instance arc choices at real positions back to parent arcs."""
        out = {}
        for v, a in choices.items():
            if v != self.w:
                out[self.kept[v]] = self.arc_map[a]
        return out


def parametrize_bwr(game: Game, keep: Iterable[int], x: Fraction) -> BwrInstance:
    """Build the restriction plus a loop position w whose self-loop pays ``x``.

    Every random position that lost probability mass gets a reward-0 arc to w
    carrying the lost mass. When x is not an integer all rewards are scaled by
    its denominator so the instance has integral rewards again.
    """
    x = Fraction(x)
    restriction = restrict(game, keep)
    sub = restriction.game
    scale = x.denominator
    w = sub.n
    arcs: list[Arc] = []
    arc_map: dict[int, int] = {}
    for i, arc in enumerate(sub.arcs):
        arcs.append(Arc(arc.source, arc.target, arc.reward * scale, arc.prob))
        arc_map[i] = restriction.arc_map[i]
    for v in range(sub.n):
        if sub.owners[v] is Owner.RANDOM:
            mass = sum((sub.arcs[i].prob for i in sub.out_arcs[v]), ZERO)
            if mass > 1:
                raise GameValidationError(f"position {restriction.kept[v]} has mass > 1")
            if mass < 1:
                arcs.append(Arc(v, w, ZERO, 1 - mass))
    arcs.append(Arc(w, w, Fraction(x.numerator), None))
    inst = Game(
        sub.owners + (Owner.WHITE,),
        tuple(arcs),
        sub.names + ("__w__",),
    )
    return BwrInstance(inst, scale, w, restriction.kept, arc_map)


@dataclass(frozen=True)
class ParamBWGame:
    """A deterministic game with one distinguished parametric self-loop.

    Built from a restriction by cutting all arcs out of its random positions
    and contracting them into a single White position w whose self-loop reward
    is the parameter. Instantiating at a rational x yields an ordinary game
    (scaled integral) whose values are ``scale`` times the parametrized ones.
    """

    base: Game  # w's self-loop carries reward 0 as a placeholder
    w: int
    kept: tuple[int, ...]  # base index -> parent index (w maps to -1)
    arc_map: dict[int, int]  # base arc index -> parent arc index (loop excluded)
    loop_arc: int

    def instantiate(self, x: Fraction) -> BwrInstance:
        x = Fraction(x)
        scale = x.denominator
        arcs = []
        for i, arc in enumerate(self.base.arcs):
            if i == self.loop_arc:
                arcs.append(Arc(arc.source, arc.target, Fraction(x.numerator), None))
            else:
                arcs.append(Arc(arc.source, arc.target, arc.reward * scale, None))
        inst = Game(self.base.owners, tuple(arcs), self.base.names)
        return BwrInstance(inst, scale, self.w, self.kept, dict(self.arc_map))


def parametrize_bw(game: Game, keep: Iterable[int]) -> ParamBWGame:
    restriction = restrict(game, keep)
    sub = restriction.game
    randoms = {v for v in range(sub.n) if sub.owners[v] is Owner.RANDOM}
    det = [v for v in range(sub.n) if v not in randoms]
    index = {v: i for i, v in enumerate(det)}
    w = len(det)
    arcs: list[Arc] = []
    arc_map: dict[int, int] = {}
    for i, arc in enumerate(sub.arcs):
        if arc.source in randoms:
            continue
        target = w if arc.target in randoms else index[arc.target]
        arc_map[len(arcs)] = restriction.arc_map[i]
        arcs.append(Arc(index[arc.source], target, arc.reward, None))
    loop_arc = len(arcs)
    arcs.append(Arc(w, w, ZERO, None))
    base = Game(
        tuple(sub.owners[v] for v in det) + (Owner.WHITE,),
        tuple(arcs),
        tuple(sub.names[v] for v in det) + ("__w__",),
    )
    for v in range(base.n):
        if not base.out_arcs[v]:
            raise EmptyOutDegreeError(restriction.kept[det[v]])
    kept = tuple(restriction.kept[v] for v in det) + (-1,)
    return ParamBWGame(base, w, kept, arc_map, loop_arc)
