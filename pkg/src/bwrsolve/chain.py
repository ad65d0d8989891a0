"""Exact analysis of the weighted Markov chain a situation induces.

Covers the chain structure (strongly connected classes, absorbing vs
transient), exact limiting distributions and mean-payoff value vectors, exact
best responses for the one-player games obtained by fixing a strategy
(multichain policy iteration on gain then bias), and saddle-point
verification built from two best responses.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

from .errors import InvariantViolationError, NonTerminationError, SingularSystemError
from .game import Game, Owner, Situation, situation_from_choices
from .linalg import solve_unique

ZERO = Fraction(0)
ONE = Fraction(1)


@dataclass(frozen=True)
class MarkovChain:
    """Row-sparse transition structure with per-state expected step rewards."""

    rows: tuple[tuple[tuple[int, Fraction], ...], ...]
    step_reward: tuple[Fraction, ...]

    @property
    def n(self) -> int:
        return len(self.rows)


def build_chain(game: Game, s: Situation) -> MarkovChain:
    """Deterministic rows become unit vectors at the chosen successor; random
    rows copy the game's probabilities (parallel arcs merged)."""
    rows = []
    rewards = []
    for v in game.positions:
        if game.owners[v].deterministic:
            arc = game.arcs[s.arc(v)]
            rows.append(((arc.target, ONE),))
            rewards.append(arc.reward)
        else:
            merged: dict[int, Fraction] = {}
            reward = ZERO
            for i in game.out_arcs[v]:
                arc = game.arcs[i]
                merged[arc.target] = merged.get(arc.target, ZERO) + arc.prob
                reward += arc.prob * arc.reward
            rows.append(tuple(sorted(merged.items())))
            rewards.append(reward)
    return MarkovChain(tuple(rows), tuple(rewards))


@dataclass(frozen=True)
class ChainStructure:
    classes: tuple[tuple[int, ...], ...]  # topological order of the condensation
    absorbing: tuple[int, ...]  # indices into classes
    transient: tuple[int, ...]  # positions outside every absorbing class
    class_of: tuple[int, ...]  # position -> class index


def chain_structure(chain: MarkovChain) -> ChainStructure:
    classes = _tarjan(chain)
    class_of = [0] * chain.n
    for ci, comp in enumerate(classes):
        for v in comp:
            class_of[v] = ci
    absorbing = []
    for ci, comp in enumerate(classes):
        comp_set = set(comp)
        if all(t in comp_set for v in comp for t, _ in chain.rows[v]):
            absorbing.append(ci)
    absorbing_positions = {v for ci in absorbing for v in classes[ci]}
    transient = tuple(v for v in range(chain.n) if v not in absorbing_positions)
    return ChainStructure(classes, tuple(absorbing), transient, tuple(class_of))


def _tarjan(chain: MarkovChain) -> tuple[tuple[int, ...], ...]:
    """Iterative Tarjan; components come out in topological order."""
    n = chain.n
    index = [-1] * n
    low = [0] * n
    on_stack = [False] * n
    stack: list[int] = []
    components: list[tuple[int, ...]] = []
    counter = 0
    for root in range(n):
        if index[root] != -1:
            continue
        work = [(root, 0)]
        while work:
            v, pi = work[-1]
            if pi == 0:
                index[v] = low[v] = counter
                counter += 1
                stack.append(v)
                on_stack[v] = True
            advanced = False
            row = chain.rows[v]
            while pi < len(row):
                u = row[pi][0]
                pi += 1
                if index[u] == -1:
                    work[-1] = (v, pi)
                    work.append((u, 0))
                    advanced = True
                    break
                if on_stack[u]:
                    low[v] = min(low[v], index[u])
            if advanced:
                continue
            work.pop()
            if low[v] == index[v]:
                comp = []
                while True:
                    u = stack.pop()
                    on_stack[u] = False
                    comp.append(u)
                    if u == v:
                        break
                components.append(tuple(sorted(comp)))
            if work:
                p = work[-1][0]
                low[p] = min(low[p], low[v])
    components.reverse()  # Tarjan emits reverse topological order
    return tuple(components)


def _prob(chain: MarkovChain, v: int, u: int) -> Fraction:
    for t, p in chain.rows[v]:
        if t == u:
            return p
    return ZERO


def stationary_distribution(chain: MarkovChain, comp: Sequence[int]) -> dict[int, Fraction]:
    """Exact stationary distribution of one absorbing class."""
    states = list(comp)
    m = len(states)
    pos = {v: i for i, v in enumerate(states)}
    # Balance equations for all states but the first, plus normalization;
    # dropping one balance row is safe because the rows sum to zero.
    a: list[list[Fraction]] = []
    b: list[Fraction] = []
    for j in states[1:]:
        row = [ZERO] * m
        for v in states:
            row[pos[v]] += _prob(chain, v, j)
        row[pos[j]] -= ONE
        a.append(row)
        b.append(ZERO)
    a.append([ONE] * m)
    b.append(ONE)
    try:
        sol = solve_unique(a, b)
    except SingularSystemError as exc:  # cannot happen on a genuine class
        raise InvariantViolationError("singular stationary system") from exc
    return {v: sol[pos[v]] for v in states}


def _absorption_values(
    chain: MarkovChain, structure: ChainStructure, boundary: Mapping[int, Fraction]
) -> list[Fraction]:
    """Solve (I - P[T;T]) y[T] = P[T;A] boundary[A]; returns full vector."""
    full = [ZERO] * chain.n
    for v, val in boundary.items():
        full[v] = val
    transient = list(structure.transient)
    if not transient:
        return full
    pos = {v: i for i, v in enumerate(transient)}
    t = len(transient)
    a = [[ZERO] * t for _ in range(t)]
    b = [ZERO] * t
    for v in transient:
        i = pos[v]
        a[i][i] += ONE
        for u, p in chain.rows[v]:
            if u in pos:
                a[i][pos[u]] -= p
            else:
                b[i] += p * boundary[u]
    try:
        sol = solve_unique(a, b)
    except SingularSystemError as exc:
        raise InvariantViolationError("transient system singular") from exc
    for v in transient:
        full[v] = sol[pos[v]]
    return full


def limiting_distribution(chain: MarkovChain, start: int) -> tuple[Fraction, ...]:
    """Exact limiting distribution over positions for the given start."""
    structure = chain_structure(chain)
    dist = [ZERO] * chain.n
    stationaries = {ci: stationary_distribution(chain, structure.classes[ci])
                    for ci in structure.absorbing}
    for ci in structure.absorbing:
        boundary = {
            v: (ONE if structure.class_of[v] == ci else ZERO)
            for cj in structure.absorbing
            for v in structure.classes[cj]
        }
        reach = _absorption_values(chain, structure, boundary)
        weight = reach[start]
        if weight:
            for v, pi in stationaries[ci].items():
                dist[v] += weight * pi
    return tuple(dist)


def class_values(chain: MarkovChain, structure: ChainStructure) -> dict[int, Fraction]:
    """Mean payoff of each absorbing class (keyed by class index)."""
    out = {}
    for ci in structure.absorbing:
        pi = stationary_distribution(chain, structure.classes[ci])
        out[ci] = sum((p * chain.step_reward[v] for v, p in pi.items()), ZERO)
    return out


def chain_values(chain: MarkovChain) -> tuple[Fraction, ...]:
    structure = chain_structure(chain)
    omega = class_values(chain, structure)
    boundary = {
        v: omega[ci] for ci in structure.absorbing for v in structure.classes[ci]
    }
    return tuple(_absorption_values(chain, structure, boundary))


def value_vector(game: Game, s: Situation) -> tuple[Fraction, ...]:
    """Exact mean payoff of the situation from every start position."""
    return chain_values(build_chain(game, s))


def gain_bias(chain: MarkovChain) -> tuple[list[Fraction], list[Fraction]]:
    """Exact gain and bias of a chain.

    The bias is normalized to 0 at the lowest-indexed state of each absorbing
    class, which is all policy iteration needs.
    """
    structure = chain_structure(chain)
    omega = class_values(chain, structure)
    boundary = {v: omega[ci] for ci in structure.absorbing for v in structure.classes[ci]}
    g = _absorption_values(chain, structure, boundary)

    h = [ZERO] * chain.n
    for ci in structure.absorbing:
        states = list(structure.classes[ci])
        m = len(states)
        pos = {v: i for i, v in enumerate(states)}
        ref = states[0]
        a: list[list[Fraction]] = []
        b: list[Fraction] = []
        # (I - P) h = c - g on the class, dropping the ref row (consistency
        # is guaranteed), pinned by h[ref] = 0.
        for v in states[1:]:
            row = [ZERO] * m
            row[pos[v]] += ONE
            for u, p in chain.rows[v]:
                row[pos[u]] -= p
            a.append(row)
            b.append(chain.step_reward[v] - g[v])
        pin = [ZERO] * m
        pin[pos[ref]] = ONE
        a.append(pin)
        b.append(ZERO)
        try:
            sol = solve_unique(a, b)
        except SingularSystemError as exc:
            raise InvariantViolationError("singular bias system") from exc
        for v in states:
            h[v] = sol[pos[v]]
    transient = list(structure.transient)
    if transient:
        pos = {v: i for i, v in enumerate(transient)}
        t = len(transient)
        a = [[ZERO] * t for _ in range(t)]
        b = [ZERO] * t
        for v in transient:
            i = pos[v]
            a[i][i] += ONE
            b[i] += chain.step_reward[v] - g[v]
            for u, p in chain.rows[v]:
                if u in pos:
                    a[i][pos[u]] -= p
                else:
                    b[i] += p * h[u]
        sol = solve_unique(a, b)
        for v in transient:
            h[v] = sol[pos[v]]
    return g, h


@dataclass(frozen=True)
class BestResponse:
    values: tuple[Fraction, ...]
    situation: Situation
    iterations: int


def best_response(
    game: Game,
    fixed: Mapping[int, int],
    optimizer: Owner,
    max_iterations: int | None = None,
) -> BestResponse:
    """Exact optimal mean payoff when one player's arcs are pinned.

    ``fixed`` maps every position of the non-optimizing player to its arc.
    The optimizer's positions are improved by multichain policy iteration:
    first on gain, and only when no gain improvement exists anywhere, on bias
    among gain-neutral arcs. Ties keep the current arc, otherwise take the
    lowest arc index, which makes the iteration deterministic and cycle-free.
    """
    if optimizer is Owner.RANDOM:
        raise ValueError("optimizer must be White or Black")
    better = (lambda a, b: a > b) if optimizer is Owner.WHITE else (lambda a, b: a < b)

    own = [v for v in game.deterministic_positions if game.owners[v] is optimizer]
    policy: dict[int, int] = {}
    for v in game.deterministic_positions:
        if game.owners[v] is optimizer:
            policy[v] = game.out_arcs[v][0]
        else:
            policy[v] = fixed[v]

    if max_iterations is None:
        bound = 1
        for v in own:
            bound *= len(game.out_arcs[v])
        max_iterations = 2 * bound + 16

    iterations = 0
    while True:
        iterations += 1
        if iterations > max_iterations:
            raise NonTerminationError("policy iteration exceeded its policy bound")
        s = situation_from_choices(game, policy)
        chain = build_chain(game, s)
        g, h = gain_bias(chain)

        gain_changed = False
        for v in own:
            cur = policy[v]
            best_arc = cur
            best_gain = g[game.arcs[cur].target]
            for i in game.out_arcs[v]:
                gi = g[game.arcs[i].target]
                if better(gi, best_gain):
                    best_gain = gi
                    best_arc = i
            if best_arc != cur and better(best_gain, g[game.arcs[cur].target]):
                policy[v] = best_arc
                gain_changed = True
        if gain_changed:
            continue

        bias_changed = False
        for v in own:
            cur = policy[v]
            cur_arc = game.arcs[cur]
            cur_val = cur_arc.reward + h[cur_arc.target]
            best_arc = cur
            best_val = cur_val
            for i in game.out_arcs[v]:
                arc = game.arcs[i]
                if g[arc.target] != g[v]:
                    continue
                val = arc.reward + h[arc.target]
                if better(val, best_val):
                    best_val = val
                    best_arc = i
            if best_arc != cur and better(best_val, cur_val):
                policy[v] = best_arc
                bias_changed = True
        if not bias_changed:
            return BestResponse(tuple(g), s, iterations)


@dataclass(frozen=True)
class SaddleReport:
    ok: bool
    values: tuple[Fraction, ...]
    black_response: tuple[Fraction, ...]
    white_response: tuple[Fraction, ...]

    def __bool__(self) -> bool:
        return self.ok


def verify_saddle_point(game: Game, s: Situation) -> SaddleReport:
    """A situation is a saddle point iff neither player's exact best response
    against the other's half improves on the situation's own values."""
    values = value_vector(game, s)
    white_fixed = {v: s.arc(v) for v in game.deterministic_positions
                   if game.owners[v] is Owner.WHITE}
    black_fixed = {v: s.arc(v) for v in game.deterministic_positions
                   if game.owners[v] is Owner.BLACK}
    black_br = best_response(game, white_fixed, Owner.BLACK).values
    white_br = best_response(game, black_fixed, Owner.WHITE).values
    ok = black_br == values and white_br == values
    return SaddleReport(ok, values, black_br, white_br)
