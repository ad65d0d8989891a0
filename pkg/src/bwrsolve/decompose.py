"""General (non-ergodic) solving by rank guessing.

The solver guesses the weak order of the random positions' values (an ordered
set partition, highest class first), peels value classes from the top, and
verifies every assembled candidate exactly; the first verified saddle point
wins. For the class under work, all random positions still in play are
contracted into a parametric loop; the interval structure of that
deterministic game says which positions sit above the class (pure
deterministic classes, solved directly), and the class itself is pinned down
through the interval of loop rewards keeping its closed-off restriction
ergodic, whose two endpoint games supply White's and Black's strategies.

Wrong guesses are only ever pruned on conditions a correct guess provably
satisfies, and acceptance is gated on exact verification, so the output is
correct whichever branch produced it.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from math import isqrt, lcm
from typing import Iterator

from .bw import solve_bw
from .bwparam import find_intervals
from .chain import build_chain, chain_structure, class_values, verify_saddle_point
from .ergodic import (
    ClassCertificate,
    ErgodicSolution,
    PumpStats,
    denominator_bound_sq,
    find_bottom,
    find_top,
    solve_ergodic,
)
from .errors import (
    EmptyOutDegreeError,
    ExhaustedGuessesError,
    GameValidationError,
    InvariantViolationError,
    NotErgodicError,
)
from .game import (
    BwrInstance,
    Game,
    Owner,
    Situation,
    black_closure,
    parametrize_bw,
    parametrize_bwr,
    restrict,
    situation_from_choices,
    validate,
)
from .ratutil import max_satisfying, min_satisfying

ZERO = Fraction(0)
ONE = Fraction(1)


# --- ergodicity interval -------------------------------------------------------


@dataclass(frozen=True)
class ErgodicityInterval:
    lo: Fraction
    hi: Fraction


class _EmptyInterval(Exception):
    pass


def _endpoint_denominator_bound(game: Game, members: frozenset[int]) -> int:
    sub = restrict(game, members)
    k = sum(1 for v in sub.game.positions if sub.game.owners[v] is Owner.RANDOM)
    if k == 0:
        return sub.game.n + 1
    d = 1
    for arc in sub.game.arcs:
        if arc.prob is not None:
            d = lcm(d, arc.prob.denominator)
    # lost-mass arcs keep the same denominator, so d is the instance's too
    return max(sub.game.n + 1, isqrt(k * 2**k * d ** (2 * k + 2)) + 1)


def find_ergodicity_interval(
    game: Game,
    members: frozenset[int],
    radius: Fraction,
    strict: bool = False,
    stats: PumpStats | None = None,
) -> ErgodicityInterval | None:
    """The closed (possibly empty) interval of loop rewards x for which the
    closed-off restriction to ``members`` is ergodic.

    Probing x runs the top/bottom class search on the instance: a position
    valued above x pushes the interval right, one below pushes it left, both
    at once prove the interval empty. Endpoints are recovered exactly by
    monotone rational search.
    """
    radius = Fraction(radius)
    bound = _endpoint_denominator_bound(game, members)
    cache: dict[Fraction, tuple[bool, bool]] = {}

    def probe(x: Fraction) -> tuple[bool, bool]:
        if x not in cache:
            inst = parametrize_bwr(game, members, x)
            target = x * inst.scale
            above = find_top(inst.game, strict=strict, stats=stats).value > target
            below = find_bottom(inst.game, strict=strict, stats=stats).value < target
            if above and below:
                raise _EmptyInterval
            cache[x] = (above, below)
        return cache[x]

    try:
        lo = min_satisfying(lambda x: not probe(x)[0], -radius, radius, bound)
        hi = max_satisfying(lambda x: not probe(x)[1], -radius, radius, bound)
    except _EmptyInterval:
        return None
    if lo > hi:
        return None
    return ErgodicityInterval(lo, hi)


# --- rank guesses ---------------------------------------------------------------


@dataclass(frozen=True)
class RankGuess:
    """A guessed weak order on the random positions, highest value first."""

    blocks: tuple[frozenset[int], ...]

    @property
    def ranks(self) -> dict[int, int]:
        return {v: i + 1 for i, block in enumerate(self.blocks) for v in block}


def enumerate_rank_guesses(random_positions: tuple[int, ...]) -> Iterator[RankGuess]:
    """All ordered set partitions, coarsest first, deterministically ordered."""
    items = list(random_positions)
    k = len(items)
    for parts in range(1, k + 1):
        for labels in itertools.product(range(parts), repeat=k):
            if set(labels) != set(range(parts)):
                continue
            blocks = tuple(
                frozenset(items[i] for i in range(k) if labels[i] == b)
                for b in range(parts)
            )
            yield RankGuess(blocks)


# --- solve result ----------------------------------------------------------------


@dataclass(frozen=True)
class ValueDecomposition:
    thetas: tuple[Fraction, ...]  # strictly increasing
    classes: tuple[frozenset[int], ...]  # classes[i] carries value thetas[i]


@dataclass(frozen=True)
class DecompositionReport:
    ok: bool
    problems: tuple[str, ...]

    def __bool__(self) -> bool:
        return self.ok


def check_decomposition(game: Game, d: ValueDecomposition) -> DecompositionReport:
    """Structural conditions every genuine value decomposition satisfies:
    no White arc upward, no Black arc downward, both players can stay in
    their class, and no random arc leaves the bottom or top class."""
    problems: list[str] = []
    if list(d.thetas) != sorted(set(d.thetas)):
        problems.append("class values are not strictly increasing")
    index: dict[int, int] = {}
    for i, cls in enumerate(d.classes):
        for v in cls:
            if v in index:
                problems.append(f"position {v} appears in two classes")
            index[v] = i
    if set(index) != set(game.positions):
        problems.append("classes do not cover the positions")
    if problems:
        return DecompositionReport(False, tuple(problems))
    top = len(d.classes) - 1
    for a, arc in enumerate(game.arcs):
        i, j = index[arc.source], index[arc.target]
        owner = game.owners[arc.source]
        if owner is Owner.WHITE and j > i:
            problems.append(f"arc {a}: White moves to a higher class")
        if owner is Owner.BLACK and j < i:
            problems.append(f"arc {a}: Black moves to a lower class")
        if owner is Owner.RANDOM and i == 0 and j != 0:
            problems.append(f"arc {a}: random move leaves the bottom class")
        if owner is Owner.RANDOM and i == top and j != top:
            problems.append(f"arc {a}: random move leaves the top class")
    for v in game.deterministic_positions:
        i = index[v]
        if not any(index[game.arcs[a].target] == i for a in game.out_arcs[v]):
            problems.append(f"position {v} has no arc inside its own class")
    return DecompositionReport(not problems, tuple(problems))


@dataclass(frozen=True)
class SolvedClass:
    value: Fraction
    positions: frozenset[int]
    certificate: ClassCertificate  # potential over the class instance's positions
    instance_scale: int


@dataclass(frozen=True)
class SolveResult:
    values: tuple[Fraction, ...]
    situation: Situation
    decomposition: ValueDecomposition
    classes: tuple[SolvedClass, ...]
    stats: PumpStats


def _decomposition_from_values(game: Game, values: tuple[Fraction, ...]) -> ValueDecomposition:
    thetas = sorted(set(values))
    classes = tuple(
        frozenset(v for v in game.positions if values[v] == t) for t in thetas
    )
    return ValueDecomposition(tuple(thetas), classes)


def _certify_class(game: Game, positions: frozenset[int], theta: Fraction,
                   strict: bool, stats: PumpStats | None) -> SolvedClass:
    inst = parametrize_bwr(game, positions, theta)
    sol = solve_ergodic(inst.game, strict=strict, stats=stats)
    if sol.value != theta * inst.scale:
        raise InvariantViolationError("class game value differs from its class value")
    return SolvedClass(theta, positions, sol.certificate, inst.scale)


def package_solution(
    game: Game,
    situation: Situation,
    strict: bool = False,
    stats: PumpStats | None = None,
    values: tuple[Fraction, ...] | None = None,
) -> SolveResult:
    """Wrap a verified-optimal situation into a full result with certificates."""
    report = verify_saddle_point(game, situation)
    if not report.ok or (values is not None and values != report.values):
        raise InvariantViolationError("situation failed saddle-point verification")
    values = report.values
    decomposition = _decomposition_from_values(game, values)
    dreport = check_decomposition(game, decomposition)
    if not dreport.ok:
        raise InvariantViolationError("; ".join(dreport.problems))
    classes = tuple(
        _certify_class(game, cls, theta, strict, stats)
        for theta, cls in zip(decomposition.thetas, decomposition.classes)
    )
    return SolveResult(values, situation, decomposition, classes,
                       stats if stats is not None else PumpStats())


def value_denominator_report(game: Game, result: SolveResult) -> tuple[bool, list[str]]:
    """Check the denominator bound on every absorbing class of the optimal
    chain: sqrt(k) 2^(k/2) D^(k+1) when the class contains a random position,
    class size (a cycle mean) when it does not."""
    params = validate(game)
    chain = build_chain(game, result.situation)
    structure = chain_structure(chain)
    omegas = class_values(chain, structure)
    bound_sq = denominator_bound_sq(params)
    problems = []
    for ci in structure.absorbing:
        comp = structure.classes[ci]
        den = omegas[ci].denominator
        if any(game.owners[v] is Owner.RANDOM for v in comp):
            if den * den > bound_sq:
                problems.append(
                    f"class {comp}: denominator {den} exceeds the random-class bound"
                )
        elif den > len(comp):
            problems.append(f"class {comp}: denominator {den} exceeds the cycle bound")
    return (not problems, problems)


# --- the assembling recursion ------------------------------------------------------


def _try_whole_set_ergodic(game: Game, members: frozenset[int], strict: bool,
                           stats: PumpStats | None) -> tuple[dict[int, int], Fraction] | None:
    restriction = restrict(game, members)
    try:
        validate(restriction.game)
    except GameValidationError:
        return None  # lost probability mass; not a standalone game
    try:
        sol = solve_ergodic(restriction.game, strict=strict, stats=stats)
    except NotErgodicError:
        return None
    choices = {v: sol.situation.arc(v) for v in restriction.game.deterministic_positions}
    return restriction.lift_choices(choices), sol.value


def _solve_class_instance(game: Game, members: frozenset[int], x: Fraction,
                          strict: bool, stats: PumpStats | None) -> tuple[ErgodicSolution, BwrInstance]:
    inst = parametrize_bwr(game, members, x)
    sol = solve_ergodic(inst.game, strict=strict, stats=stats)
    if sol.value != x * inst.scale:
        raise NotErgodicError(None)
    return sol, inst


def _assemble(
    game: Game,
    unsolved: frozenset[int],
    blocks: tuple[frozenset[int], ...],
    upper_bound: Fraction | None,
    radius: Fraction,
    strict: bool,
    stats: PumpStats | None,
) -> Iterator[dict[int, int]]:
    """Yield candidate arc choices covering ``unsolved``, peeling the first
    block's class (and everything above it) off the front."""
    if not unsolved:
        if not blocks:
            yield {}
        return
    if not blocks:
        # Only deterministic positions remain.
        try:
            restriction = restrict(game, unsolved)
        except EmptyOutDegreeError:
            return
        if any(restriction.game.owners[v] is Owner.RANDOM for v in restriction.game.positions):
            raise InvariantViolationError("random positions remain with no blocks left")
        sol = solve_bw(restriction.game, strict=strict, verify=False, stats=stats)
        choices = {v: sol.situation.arc(v) for v in restriction.game.deterministic_positions}
        yield restriction.lift_choices(choices)
        return

    block, rest_blocks = blocks[0], blocks[1:]
    if not block <= unsolved:
        return
    lower = frozenset().union(*rest_blocks) if rest_blocks else frozenset()

    try:
        rest_u = restrict(game, unsolved)
    except EmptyOutDegreeError:
        return
    seeds = {rest_u.index_of[v] for v in lower}
    closure = black_closure(rest_u.game, seeds)
    removed = rest_u.lift_positions(closure.members)
    if removed & block:
        return
    working = unsolved - removed

    shortcut = _try_whole_set_ergodic(game, working, strict, stats)
    if shortcut is not None:
        choices, value = shortcut
        if upper_bound is None or value < upper_bound:
            for rest in _assemble(game, unsolved - working, rest_blocks, value,
                                  radius, strict, stats):
                yield {**choices, **rest}

    try:
        pg = parametrize_bw(game, working)
    except EmptyOutDegreeError:
        return
    structure = find_intervals(pg, radius, strict=strict, stats=stats)
    for sl in sorted(structure.slices, key=lambda s: s.lo, reverse=True):
        if upper_bound is not None and sl.lo >= upper_bound:
            continue
        above = frozenset(pg.kept[v] for v in sl.above)
        tracking_real = frozenset(pg.kept[v] for v in sl.tracking if v != pg.w)

        plus_choices: dict[int, int] = {}
        if above:
            try:
                rest_a = restrict(game, above)
            except EmptyOutDegreeError:
                continue
            bw = solve_bw(rest_a.game, strict=strict, verify=False, stats=stats)
            plus_choices = rest_a.lift_choices(
                {v: bw.situation.arc(v) for v in rest_a.game.deterministic_positions}
            )

        class_members = tracking_real | block
        try:
            tau = find_ergodicity_interval(game, class_members, radius, strict, stats)
        except EmptyOutDegreeError:
            continue
        if tau is None:
            continue
        lo_cap = max(tau.lo, sl.lo)
        hi_cap = min(tau.hi, sl.hi)
        if upper_bound is not None:
            hi_cap = min(hi_cap, upper_bound)
        if lo_cap > hi_cap:
            continue
        try:
            sol_lo, inst_lo = _solve_class_instance(game, class_members, tau.lo, strict, stats)
            sol_hi, inst_hi = _solve_class_instance(game, class_members, tau.hi, strict, stats)
        except (NotErgodicError, EmptyOutDegreeError):
            continue
        hi_choices = inst_hi.lift_choices(
            {v: sol_hi.situation.arc(v) for v in inst_hi.game.deterministic_positions
             if v != inst_hi.w}
        )
        lo_choices = inst_lo.lift_choices(
            {v: sol_lo.situation.arc(v) for v in inst_lo.game.deterministic_positions
             if v != inst_lo.w}
        )
        class_choices = {v: a for v, a in hi_choices.items() if game.owners[v] is Owner.WHITE}
        class_choices.update(
            (v, a) for v, a in lo_choices.items() if game.owners[v] is Owner.BLACK
        )

        remaining = unsolved - above - class_members
        for rest in _assemble(game, remaining, rest_blocks, hi_cap, radius, strict, stats):
            yield {**plus_choices, **class_choices, **rest}


def bwr_solve(game: Game, strict: bool = False, stats: PumpStats | None = None) -> SolveResult:
    """Solve any game exactly: values, a uniformly optimal situation, the
    decomposition into value classes, and per-class certificates."""
    params = validate(game)
    if stats is None:
        stats = PumpStats()
    if params.k == 0:
        bw = solve_bw(game, strict=strict, verify=False, stats=stats)
        return package_solution(game, bw.situation, strict, stats, bw.values)

    top = find_top(game, strict=strict, stats=stats)
    if top.covers(game):
        situation = situation_from_choices(game, top.choices)
        return package_solution(game, situation, strict, stats)

    radius = max(params.max_abs_reward, ONE)
    everything = frozenset(game.positions)
    seen: set[tuple] = set()
    for guess in enumerate_rank_guesses(game.random_positions):
        for choices in _assemble(game, everything, guess.blocks, None, radius, strict, stats):
            key = tuple(sorted(choices.items()))
            if key in seen:
                continue
            seen.add(key)
            situation = situation_from_choices(game, choices)
            report = verify_saddle_point(game, situation)
            if report.ok:
                return package_solution(game, situation, strict, stats, report.values)
    raise ExhaustedGuessesError("no rank guess produced a verified saddle point")
