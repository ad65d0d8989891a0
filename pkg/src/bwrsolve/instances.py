"""Instance generators: the two named lower-bound families plus seeded random
and complete-tripartite test families.

Generators are pure functions of their parameters (and seed), so the same
call always yields byte-identical games.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction

from .game import Game, Owner, make_game

FIGURE2_SCALE = 4


def gen_figure1(l: int, d: int) -> Game:
    """All-random chain of 2l+1 positions whose canonical potentials grow like
    d^l, which forces pumping-style solvers into d^Omega(l) iterations.

    Rewards are zero except +1 on the u_l self-loop and -1 on the v_l
    self-loop; every value is 0.
    """
    if l < 1 or d < 1:
        raise ValueError("l and d must be positive")
    names = [f"u{i}" for i in range(l, 0, -1)] + ["u0"] + [f"v{i}" for i in range(1, l + 1)]
    positions = [(name, Owner.RANDOM) for name in names]
    stay = Fraction(d, d + 1)
    back = Fraction(1, d + 1)
    arcs: list[tuple] = []
    arcs.append((f"u{l}", f"u{l}", 1, stay))
    arcs.append((f"v{l}", f"v{l}", -1, stay))
    arcs.append(("u0", "u1", 0, Fraction(1, 2)))
    arcs.append(("u0", "v1", 0, Fraction(1, 2)))
    for i in range(2, l + 1):
        arcs.append((f"u{i - 1}", f"u{i}", 0, stay))
        arcs.append((f"v{i - 1}", f"v{i}", 0, stay))
    for i in range(1, l + 1):
        arcs.append((f"u{i}", f"u{i - 1}" if i > 1 else "u0", 0, back))
        arcs.append((f"v{i}", f"v{i - 1}" if i > 1 else "u0", 0, back))
    return make_game(positions, arcs)


def figure1_limit_at_center(l: int, d: int) -> Fraction:
    """Closed-form limiting probability of the center position u0."""
    return Fraction(d - 1, (d + 1) * d**l - 2)


def figure1_limit_at(l: int, d: int, i: int) -> Fraction:
    """Closed-form limiting probability of u_i (equal to v_i), i >= 1."""
    return Fraction(d ** (i - 1) * (d * d - 1), 2 * ((d + 1) * d**l - 2))


@dataclass(frozen=True)
class ScaledGame:
    game: Game
    scale: int


def gen_figure2(r: int) -> ScaledGame:
    """Four-position all-Black game whose two middle positions oscillate on
    the order of r times before settling; every value is 0.

    The natural rewards involve quarters, so everything is scaled by 4 to
    stay integral; report values divided by ``scale``.
    """
    if r < 1:
        raise ValueError("r must be >= 1")
    s = FIGURE2_SCALE
    game = make_game(
        [("u1", "B"), ("u2", "B"), ("u3", "B"), ("u4", "B")],
        [
            ("u1", "u1", 1 * s),
            ("u1", "u2", r * s),
            ("u1", "u3", r * s),
            ("u2", "u4", r * s),
            ("u3", "u4", r * s),
            ("u2", "u3", 3),
            ("u3", "u2", 1),
            ("u4", "u4", 0),
        ],
    )
    return ScaledGame(game, s)


def _random_prob_vector(rng: random.Random, parts: int, d: int) -> list[Fraction]:
    """Positive fractions with denominator dividing d summing to exactly 1."""
    if parts > d:
        raise ValueError("cannot split denominator d into more positive parts than d")
    cuts = sorted(rng.sample(range(1, d), parts - 1)) if parts > 1 else []
    bounds = [0] + cuts + [d]
    return [Fraction(bounds[i + 1] - bounds[i], d) for i in range(parts)]


def gen_random(n: int, k: int, d: int, r: int, max_out_degree: int, seed: int) -> Game:
    """Seeded random game: k random positions among n, integer rewards in
    [-r, r], probabilities with common denominator dividing d."""
    if not (0 <= k <= n) or d < 1 or r < 0 or max_out_degree < 1:
        raise ValueError("bad random-family parameters")
    rng = random.Random(seed)
    owners = []
    random_set = set(rng.sample(range(n), k))
    for v in range(n):
        if v in random_set:
            owners.append(Owner.RANDOM)
        else:
            owners.append(Owner.WHITE if rng.random() < 0.5 else Owner.BLACK)
    positions = [(f"p{v}", owners[v]) for v in range(n)]
    arcs: list[tuple] = []
    for v in range(n):
        if owners[v] is Owner.RANDOM:
            deg = rng.randint(1, min(max_out_degree, d, n))
            targets = rng.sample(range(n), deg)
            probs = _random_prob_vector(rng, deg, d)
            for t, p in zip(targets, probs):
                arcs.append((v, t, rng.randint(-r, r), p))
        else:
            deg = rng.randint(1, max_out_degree)
            for _ in range(deg):
                arcs.append((v, rng.randrange(n), rng.randint(-r, r)))
    return make_game(positions, arcs)


def gen_tripartite(sizes: tuple[int, int, int], d: int, r: int, seed: int) -> Game:
    """Complete tripartite game over the ownership classes themselves.

    The three parts are the White, Black, and Random position sets, with arcs
    both ways between every pair of positions in different parts and none
    inside a part. Such a digraph admits no contra-ergodic partition, so every
    game on it is ergodic.
    """
    nw, nb, nk = sizes
    if min(sizes) < 1:
        raise ValueError("all three parts must be nonempty")
    rng = random.Random(seed)
    positions = (
        [(f"w{i}", Owner.WHITE) for i in range(nw)]
        + [(f"b{i}", Owner.BLACK) for i in range(nb)]
        + [(f"r{i}", Owner.RANDOM) for i in range(nk)]
    )
    n = nw + nb + nk
    part = lambda v: 0 if v < nw else (1 if v < nw + nb else 2)
    arcs: list[tuple] = []
    for v in range(n):
        targets = [u for u in range(n) if part(u) != part(v)]
        if part(v) == 2:
            probs = _random_prob_vector(rng, len(targets), d * len(targets))
            for t, p in zip(targets, probs):
                arcs.append((v, t, rng.randint(-r, r), p))
        else:
            for t in targets:
                arcs.append((v, t, rng.randint(-r, r)))
    return make_game(positions, arcs)
