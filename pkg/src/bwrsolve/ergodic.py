"""The pumping solver for the ergodic case, and the top/bottom class search.

One pumping iteration lowers the potentials of every position whose local
value sits in the upper half of the current range by the largest step that
keeps all local values inside the middle half. Phases end when a quarter of
the range empties (shrinking the range by 25%), at which point the potentials
are snapped back to an extreme point of a bounding polyhedron so they cannot
grow out of control. A phase that exceeds its iteration cap, or an unbounded
step, yields a contra-ergodic partition certifying non-ergodicity.

Accuracy: distinct game values are rationals with bounded denominators, so
once the local-value range drops below the minimum possible gap the game must
be ergodic and the locally optimal situation is optimal. We use
1 / (max(n^2, k 2^k D^(2k+2)) + 1), which also covers values that are plain
cycle means (denominator up to n); at k = 0 it degenerates to 1/(n^2+1).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import floor
from typing import Callable, Iterable, Mapping

from .chain import build_chain, gain_bias, value_vector, verify_saddle_point
from .errors import (
    InfeasibleInputError,
    InvariantViolationError,
    NotErgodicError,
)
from .game import (
    Game,
    GameParams,
    LocalValues,
    Owner,
    Potential,
    Situation,
    black_semi_closure,
    check_canonical_form,
    extract_locally_optimal_situation,
    has_integral_rewards,
    local_values_from,
    restrict,
    transform_rewards,
    validate,
    white_semi_closure,
    zero_potential,
)
from .linalg import nullspace_vector

ZERO = Fraction(0)
ONE = Fraction(1)

TraceSink = Callable[[str], None]


def denominator_bound_sq(params: GameParams) -> int:
    """Squared denominator bound for values on absorbing classes that contain
    a random position: (sqrt(k) 2^(k/2) D^(k+1))^2, exactly."""
    if params.k == 0:
        return 0
    return params.k * 2**params.k * params.denominator ** (2 * params.k + 2)


def default_accuracy(params: GameParams) -> Fraction:
    """Accuracy below the least possible gap between two distinct values."""
    return Fraction(1, max(params.n**2, denominator_bound_sq(params)) + 1)


# --- contra-ergodic partitions ----------------------------------------------


@dataclass(frozen=True)
class ContraErgodicPartition:
    """A split (V+, V-, V0) certifying that values differ across sides."""

    v_plus: frozenset[int]
    v_minus: frozenset[int]
    v_zero: frozenset[int]
    witness: Potential


@dataclass(frozen=True)
class PartitionReport:
    ok: bool
    problems: tuple[str, ...]

    def __bool__(self) -> bool:
        return self.ok


def check_contra_ergodic(game: Game, part: ContraErgodicPartition) -> PartitionReport:
    """Structural conditions plus the local-value separation that makes the
    partition certify distinct values."""
    problems: list[str] = []
    plus, minus = part.v_plus, part.v_minus
    if not plus or not minus:
        problems.append("a side is empty")
    if plus & minus or plus & part.v_zero or minus & part.v_zero:
        problems.append("sides overlap")
    if plus | minus | part.v_zero != set(game.positions):
        problems.append("sides do not cover the game")
    for i, arc in enumerate(game.arcs):
        v, u = arc.source, arc.target
        owner = game.owners[v]
        if v in minus and owner in (Owner.WHITE, Owner.RANDOM) and u not in minus:
            problems.append(f"arc {i} lets White/Random leave the minus side")
        if v in plus and owner in (Owner.BLACK, Owner.RANDOM) and u not in plus:
            problems.append(f"arc {i} lets Black/Random leave the plus side")
    for v in game.positions:
        if v in plus and game.owners[v] is Owner.WHITE:
            if not any(game.arcs[i].target in plus for i in game.out_arcs[v]):
                problems.append(f"White position {v} cannot stay in the plus side")
        if v in minus and game.owners[v] is Owner.BLACK:
            if not any(game.arcs[i].target in minus for i in game.out_arcs[v]):
                problems.append(f"Black position {v} cannot stay in the minus side")
    if not problems:
        lv = local_values_from(game, transform_rewards(game, part.witness))
        lo_plus = min(lv.m[v] for v in plus)
        hi_minus = max(lv.m[v] for v in minus)
        if not lo_plus > hi_minus:
            problems.append("local values do not separate the sides")
    return PartitionReport(not problems, tuple(problems))


# --- pump state and statistics ----------------------------------------------


@dataclass
class PumpStats:
    iterations: int = 0
    phases: int = 0
    reduce_calls: int = 0
    partition_events: int = 0
    delta_floor_checks: int = 0
    spread_checks: int = 0
    norm_checks: int = 0
    phase_cap_checks: int = 0
    max_phase_iterations: int = 0
    max_potential_norm: Fraction = ZERO

    def merge(self, other: "PumpStats") -> None:
        self.iterations += other.iterations
        self.phases += other.phases
        self.reduce_calls += other.reduce_calls
        self.partition_events += other.partition_events
        self.delta_floor_checks += other.delta_floor_checks
        self.spread_checks += other.spread_checks
        self.norm_checks += other.norm_checks
        self.phase_cap_checks += other.phase_cap_checks
        self.max_phase_iterations = max(self.max_phase_iterations, other.max_phase_iterations)
        self.max_potential_norm = max(self.max_potential_norm, other.max_potential_norm)


@dataclass
class PumpState:
    """Mutable loop state; exposed mainly for compute_delta and tests."""

    x: list[Fraction]
    phase: int
    iteration: int
    thresholds: tuple[Fraction, Fraction, Fraction, Fraction, Fraction]
    cap: int
    m_range: Fraction
    reward_range: Fraction
    epsilon: Fraction
    rx: tuple[Fraction, ...] = ()
    locals: LocalValues | None = None


@dataclass(frozen=True)
class PumpResult:
    potential: Potential | None
    situation: Situation | None
    partition: ContraErgodicPartition | None
    stats: PumpStats

    @property
    def succeeded(self) -> bool:
        return self.partition is None


def _upper_set(game: Game, m: LocalValues, t2: Fraction) -> list[bool]:
    return [m.m[v] >= t2 for v in game.positions]


def compute_delta(game: Game, state: PumpState) -> Fraction | None:
    """Largest safe pumping step, or None when it is unbounded.

    Positions in the upper half must keep local value >= t1, the rest must
    stay <= t3; the step is the minimum of the per-position slacks.
    """
    _, t1, t2, t3, _ = state.thresholds
    rx = state.rx
    m = state.locals.m
    upper = _upper_set(game, state.locals, t2)
    best: Fraction | None = None

    def tighten(bound: Fraction) -> None:
        nonlocal best
        if best is None or bound < best:
            best = bound

    for v in game.positions:
        out = game.out_arcs[v]
        owner = game.owners[v]
        if upper[v]:
            if owner is Owner.WHITE:
                stay = [rx[i] for i in out if upper[game.arcs[i].target]]
                if stay and max(stay) >= t1:
                    continue
                cross = [rx[i] for i in out if not upper[game.arcs[i].target]]
                tighten(max(cross) - t1)
            elif owner is Owner.BLACK:
                cross = [rx[i] for i in out if not upper[game.arcs[i].target]]
                if cross:
                    tighten(min(cross) - t1)
            else:
                mass = sum(
                    (game.arcs[i].prob for i in out if not upper[game.arcs[i].target]),
                    ZERO,
                )
                if mass > 0:
                    tighten((m[v] - t1) / mass)
        else:
            if owner is Owner.WHITE:
                cross = [rx[i] for i in out if upper[game.arcs[i].target]]
                if cross:
                    tighten(t3 - max(cross))
            elif owner is Owner.BLACK:
                stay = [rx[i] for i in out if not upper[game.arcs[i].target]]
                if stay and min(stay) <= t3:
                    continue
                cross = [rx[i] for i in out if upper[game.arcs[i].target]]
                tighten(t3 - min(cross))
            else:
                mass = sum(
                    (game.arcs[i].prob for i in out if upper[game.arcs[i].target]),
                    ZERO,
                )
                if mass > 0:
                    tighten((t3 - m[v]) / mass)
    return best


# --- potential reduction -----------------------------------------------------

_Row = tuple[dict[int, Fraction], Fraction | None, Fraction | None]


def _reduction_rows(game: Game, x: list[Fraction]) -> list[_Row]:
    rx = transform_rewards(game, x)
    lv = local_values_from(game, rx)
    m_lo, m_hi = lv.low, lv.high
    rows: list[_Row] = []
    for i, arc in enumerate(game.arcs):
        v, u = arc.source, arc.target
        if game.owners[v] is Owner.RANDOM or v == u:
            continue
        coeffs = {v: ONE, u: -ONE}
        if m_lo <= rx[i] <= m_hi:
            rows.append((coeffs, m_lo - arc.reward, m_hi - arc.reward))
        elif game.owners[v] is Owner.WHITE:
            rows.append((coeffs, None, m_hi - arc.reward))
        else:
            rows.append((coeffs, m_lo - arc.reward, None))
    for v in game.random_positions:
        coeffs: dict[int, Fraction] = {v: ONE}
        const = ZERO
        for i in game.out_arcs[v]:
            arc = game.arcs[i]
            const += arc.prob * arc.reward
            coeffs[arc.target] = coeffs.get(arc.target, ZERO) - arc.prob
        coeffs = {p: c for p, c in coeffs.items() if c != 0}
        if coeffs:
            rows.append((coeffs, m_lo - const, m_hi - const))
        elif not (m_lo <= const <= m_hi):
            raise InvariantViolationError("degenerate random row escapes the range")
    for v in game.positions:
        rows.append(({v: ONE}, ZERO, None))
    return rows


def reduce_potentials(game: Game, x: Potential, stats: PumpStats | None = None) -> Potential:
    """Walk from a feasible potential to an extreme point of the polyhedron
    that keeps every local value inside the current range.

    The result never widens the local-value range and its max-norm obeys the
    n R max(1, k (2D)^k) bound, both asserted.
    """
    params = validate(game)
    shift = min(x)
    cur = [xi - shift for xi in x]
    before = local_values_from(game, transform_rewards(game, [Fraction(c) for c in cur]))
    rows = _reduction_rows(game, cur)

    def row_value(coeffs: Mapping[int, Fraction]) -> Fraction:
        return sum((c * cur[p] for p, c in coeffs.items()), ZERO)

    for coeffs, lo, hi in rows:
        val = row_value(coeffs)
        if (lo is not None and val < lo) or (hi is not None and val > hi):
            raise InfeasibleInputError("potential lies outside its own polyhedron")

    n = game.n
    for _ in range(n + 2):
        active: list[list[Fraction]] = []
        for coeffs, lo, hi in rows:
            val = row_value(coeffs)
            if (lo is not None and val == lo) or (hi is not None and val == hi):
                active.append([coeffs.get(p, ZERO) for p in range(n)])
        direction = nullspace_vector(active, n)
        if direction is None:
            break

        def max_step(d: list[Fraction]) -> Fraction | None:
            step: Fraction | None = None
            for coeffs, lo, hi in rows:
                slope = sum((c * d[p] for p, c in coeffs.items()), ZERO)
                if slope == 0:
                    continue
                val = row_value(coeffs)
                if slope > 0 and hi is not None:
                    room = (hi - val) / slope
                elif slope < 0 and lo is not None:
                    room = (lo - val) / slope
                else:
                    continue
                if step is None or room < step:
                    step = room
            return step

        step = max_step(direction)
        if step is None:
            direction = [-d for d in direction]
            step = max_step(direction)
            if step is None:
                raise InvariantViolationError("free line in a pointed polyhedron")
        cur = [cur[p] + step * direction[p] for p in range(n)]
    else:
        raise InvariantViolationError("vertex walk did not converge")

    norm = max((abs(c) for c in cur), default=ZERO)
    k, d = params.k, params.denominator
    bound = params.n * params.reward_range * max(1, k * (2 * d) ** k)
    if norm > bound:
        raise InvariantViolationError(f"reduced potential norm {norm} exceeds {bound}")
    after = local_values_from(game, transform_rewards(game, [Fraction(c) for c in cur]))
    if after.low < before.low or after.high > before.high:
        raise InvariantViolationError("potential reduction widened the local-value range")
    if stats is not None:
        stats.norm_checks += 1
        stats.max_potential_norm = max(stats.max_potential_norm, norm)
    return tuple(cur)


# --- contra-ergodic partition extraction -------------------------------------


def _extremal_arcs(game: Game, rx, m) -> set[int]:
    return {
        i
        for i, arc in enumerate(game.arcs)
        if game.owners[arc.source].deterministic and rx[i] == m[arc.source]
    }


def scan_lower_threshold(game: Game, y: list[Fraction], ext: set[int]) -> tuple[Fraction, frozenset[int]]:
    """Largest threshold whose upper level set is closed for White/Random arcs
    and for Black extremal arcs."""
    candidates = sorted(set(y), reverse=True)
    for t in candidates:
        inside = {v for v in game.positions if y[v] >= t}
        ok = True
        for i, arc in enumerate(game.arcs):
            if arc.source not in inside or arc.target in inside:
                continue
            owner = game.owners[arc.source]
            if owner in (Owner.WHITE, Owner.RANDOM) or (owner is Owner.BLACK and i in ext):
                ok = False
                break
        if ok:
            return t, frozenset(inside)
    raise InvariantViolationError("no feasible lower threshold")


def scan_upper_threshold(game: Game, y: list[Fraction], ext: set[int]) -> tuple[Fraction, frozenset[int]]:
    """Smallest threshold whose lower level set is closed for Black/Random arcs
    and for White extremal arcs."""
    candidates = sorted(set(y))
    for t in candidates:
        inside = {v for v in game.positions if y[v] <= t}
        ok = True
        for i, arc in enumerate(game.arcs):
            if arc.source not in inside or arc.target in inside:
                continue
            owner = game.owners[arc.source]
            if owner in (Owner.BLACK, Owner.RANDOM) or (owner is Owner.WHITE and i in ext):
                ok = False
                break
        if ok:
            return t, frozenset(inside)
    raise InvariantViolationError("no feasible upper threshold")


def find_partition(
    game: Game,
    x_total: list[Fraction],
    x_phase_start: list[Fraction],
    reward_range_h: Fraction,
    params: GameParams,
    stats: PumpStats | None = None,
) -> ContraErgodicPartition:
    """Build a contra-ergodic partition after a phase exhausted its cap.

    Thresholds scan the phase-relative potentials (shifted so their maximum is
    0): the near-zero side holds positions that were almost never pumped, the
    near-minimum side positions that were pumped almost always.
    """
    rx = transform_rewards(game, tuple(x_total))
    lv = local_values_from(game, rx)
    ext = _extremal_arcs(game, rx, lv.m)
    rel = [x_total[v] - x_phase_start[v] for v in game.positions]
    top = max(rel)
    y = [r - top for r in rel]
    y_min = min(y)

    t_l, low_side = scan_lower_threshold(game, y, ext)
    t_u, high_side = scan_upper_threshold(game, y, ext)

    spread_bound = params.n * reward_range_h * (ONE / params.theta) ** params.k
    if max(-t_l, t_u - y_min) > spread_bound:
        raise InvariantViolationError("threshold spread exceeds its bound")
    if stats is not None:
        stats.spread_checks += 1
    if low_side & high_side:
        raise InvariantViolationError("partition sides intersect")

    part = ContraErgodicPartition(
        v_plus=high_side,
        v_minus=low_side,
        v_zero=frozenset(game.positions) - high_side - low_side,
        witness=tuple(x_total),
    )
    report = check_contra_ergodic(game, part)
    if not report.ok:
        raise InvariantViolationError("; ".join(report.problems))
    return part


# --- the pump ----------------------------------------------------------------


def pump(
    game: Game,
    epsilon: Fraction,
    trace: TraceSink | None = None,
    stats: PumpStats | None = None,
) -> PumpResult:
    """Run the pumping loop until the local-value range is at most epsilon or
    a contra-ergodic partition appears."""
    params = validate(game)
    if not has_integral_rewards(game):
        raise ValueError("pump requires integral rewards")
    epsilon = Fraction(epsilon)
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    if stats is None:
        stats = PumpStats()

    n = game.n
    dk = params.denominator**params.k
    x: list[Fraction] = list(zero_potential(game))
    rx = transform_rewards(game, tuple(x))
    lv = local_values_from(game, rx)

    state = PumpState(
        x=x,
        phase=0,
        iteration=0,
        thresholds=(ZERO, ZERO, ZERO, ZERO, ZERO),
        cap=0,
        m_range=ZERO,
        reward_range=ZERO,
        epsilon=epsilon,
    )
    phase_start_x = x[:]
    phase_open = False

    def open_phase() -> None:
        nonlocal phase_open, phase_start_x
        m_lo, m_hi = lv.low, lv.high
        m_range = m_hi - m_lo
        quarter = m_range / 4
        state.thresholds = (
            m_lo,
            m_lo + quarter,
            m_lo + 2 * quarter,
            m_lo + 3 * quarter,
            m_hi,
        )
        state.m_range = m_range
        state.reward_range = max(rx) - min(rx)
        state.cap = floor(8 * n * n * state.reward_range * dk / m_range) + 1
        state.iteration = 0
        phase_start_x = x[:]
        phase_open = True

    while True:
        if lv.spread <= epsilon:
            if phase_open:
                stats.phase_cap_checks += 1
            situation = extract_locally_optimal_situation(game, tuple(x))
            return PumpResult(tuple(x), situation, None, stats)
        if not phase_open:
            open_phase()
        state.rx = rx
        state.locals = lv

        delta = compute_delta(game, state)
        if delta is None:
            upper = _upper_set(game, lv, state.thresholds[2])
            part = ContraErgodicPartition(
                v_plus=frozenset(v for v in game.positions if upper[v]),
                v_minus=frozenset(v for v in game.positions if not upper[v]),
                v_zero=frozenset(),
                witness=tuple(x),
            )
            report = check_contra_ergodic(game, part)
            if not report.ok:
                raise InvariantViolationError("; ".join(report.problems))
            stats.partition_events += 1
            if trace:
                trace(f"phase={state.phase} iter={state.iteration + 1} delta=inf "
                      f"range={lv.spread}")
            return PumpResult(None, None, part, stats)

        if delta < state.m_range / 4:
            raise InvariantViolationError("pumping step fell below a quarter range")
        stats.delta_floor_checks += 1

        t2 = state.thresholds[2]
        for v in game.positions:
            if lv.m[v] >= t2:
                x[v] -= delta
        rx = transform_rewards(game, tuple(x))
        lv = local_values_from(game, rx)
        state.iteration += 1
        stats.iterations += 1
        stats.max_phase_iterations = max(stats.max_phase_iterations, state.iteration)
        if trace:
            trace(f"phase={state.phase} iter={state.iteration} delta={delta} "
                  f"range={lv.spread}")

        t1, t3 = state.thresholds[1], state.thresholds[3]
        lower_quarter = any(m < t1 for m in lv.m)
        upper_quarter = any(m > t3 for m in lv.m)
        if not lower_quarter or not upper_quarter:
            if state.iteration > state.cap:
                raise InvariantViolationError("phase exceeded its iteration cap")
            stats.phase_cap_checks += 1
            new_x = reduce_potentials(game, tuple(x), stats)
            stats.reduce_calls += 1
            x = list(new_x)
            rx = transform_rewards(game, tuple(x))
            lv = local_values_from(game, rx)
            state.phase += 1
            stats.phases += 1
            phase_open = False
            if trace:
                trace(f"phase={state.phase} start range={lv.spread}")
            continue

        if state.iteration >= state.cap:
            part = find_partition(game, x, phase_start_x, state.reward_range, params, stats)
            stats.partition_events += 1
            return PumpResult(None, None, part, stats)


# --- ergodic solving ----------------------------------------------------------


@dataclass(frozen=True)
class ClassCertificate:
    """Potential certifying one ergodic class's value.

    When ``exact`` is true the potential satisfies the canonical-form
    conditions outright; otherwise it is a pump potential whose local-value
    spread is at most ``slack``.
    """

    potential: Potential
    exact: bool
    slack: Fraction


@dataclass(frozen=True)
class ErgodicSolution:
    value: Fraction
    values: tuple[Fraction, ...]
    situation: Situation
    certificate: ClassCertificate
    stats: PumpStats


def _extract_solution(game: Game, result: PumpResult) -> ErgodicSolution | None:
    situation = result.situation
    mu = value_vector(game, situation)
    if any(m != mu[0] for m in mu):
        return None
    if not verify_saddle_point(game, situation).ok:
        return None
    value = mu[0]
    chain = build_chain(game, situation)
    _, bias = gain_bias(chain)
    if check_canonical_form(game, tuple(bias), mu).ok:
        certificate = ClassCertificate(tuple(bias), True, ZERO)
    else:
        lv = local_values_from(game, transform_rewards(game, result.potential))
        certificate = ClassCertificate(result.potential, False, lv.spread)
    return ErgodicSolution(value, mu, situation, certificate, result.stats)


def coarse_accuracy(params: GameParams) -> Fraction:
    return Fraction(1, 4 * (params.n + 1) ** 2)


def solve_ergodic(
    game: Game,
    strict: bool = False,
    trace: TraceSink | None = None,
    stats: PumpStats | None = None,
) -> ErgodicSolution:
    """Solve an ergodic game exactly; raise NotErgodicError with a verified
    partition otherwise.

    By default a coarse-accuracy pump runs first; its output is accepted only
    when exact evaluation confirms a constant, saddle-verified value (which
    makes acceptance sound at any accuracy), and the strict-accuracy pump is
    the fallback. ``strict=True`` skips the coarse tier.
    """
    params = validate(game)
    strict_eps = default_accuracy(params)
    tiers = [strict_eps]
    if not strict:
        coarse = coarse_accuracy(params)
        if coarse > strict_eps:
            tiers.insert(0, coarse)
    shared = stats if stats is not None else PumpStats()
    for i, eps in enumerate(tiers):
        result = pump(game, eps, trace=trace, stats=shared)
        if not result.succeeded:
            raise NotErgodicError(result.partition)
        solution = _extract_solution(game, result)
        if solution is not None:
            return solution
        if i == len(tiers) - 1:
            raise InvariantViolationError(
                "strict-accuracy pump succeeded but extraction failed"
            )
    raise InvariantViolationError("unreachable")


# --- top and bottom classes ----------------------------------------------------


@dataclass(frozen=True)
class ExtremeClass:
    """An extreme ergodic class: its positions, an optimal situation on them,
    its exact value, and the forcing arcs that excluded the rest."""

    positions: frozenset[int]
    choices: dict[int, int] = field(hash=False)
    value: Fraction = ZERO
    containment: dict[int, int] = field(hash=False, default_factory=dict)

    def covers(self, game: Game) -> bool:
        return len(self.positions) == game.n


def _find_extreme(game: Game, top: bool, strict: bool, stats: PumpStats | None) -> ExtremeClass:
    try:
        sol = solve_ergodic(game, strict=strict, stats=stats)
    except NotErgodicError as err:
        part = err.partition
        if top:
            closure = black_semi_closure(game, part.v_minus)
        else:
            closure = white_semi_closure(game, part.v_plus)
        keep = [v for v in game.positions if v not in closure.members]
        if not keep or len(keep) == game.n:
            raise InvariantViolationError("semi-closure removed nothing or everything")
        restriction = restrict(game, keep)
        inner = _find_extreme(restriction.game, top, strict, stats)
        choices = restriction.lift_choices(inner.choices)
        containment = dict(closure.forcing)
        containment.update(restriction.lift_choices(inner.containment))
        return ExtremeClass(
            restriction.lift_positions(inner.positions),
            choices,
            inner.value,
            containment,
        )
    choices = {
        v: sol.situation.arc(v) for v in game.deterministic_positions
    }
    return ExtremeClass(frozenset(game.positions), choices, sol.value, {})


def find_top(game: Game, strict: bool = False, stats: PumpStats | None = None) -> ExtremeClass:
    """The class of maximal value, with an optimal situation on it."""
    return _find_extreme(game, True, strict, stats)


def find_bottom(game: Game, strict: bool = False, stats: PumpStats | None = None) -> ExtremeClass:
    """The class of minimal value, with an optimal situation on it."""
    return _find_extreme(game, False, strict, stats)
