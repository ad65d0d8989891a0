"""Stern-Brocot style rational searching.

Used to recover exact rational breakpoints from monotone yes/no probes: the
searches below keep an exact bracket, preferentially probe the simplest
rational inside it, interleave midpoint probes so the bracket provably
shrinks, and stop as soon as the bracket holds exactly one rational within
the denominator bound.
"""

from __future__ import annotations

from fractions import Fraction
from math import ceil, floor
from typing import Callable

from .errors import InvariantViolationError

Predicate = Callable[[Fraction], bool]


def simplest_between(
    lo: Fraction,
    hi: Fraction,
    include_lo: bool = True,
    include_hi: bool = True,
) -> Fraction | None:
    """The smallest-denominator rational in the given interval (ties broken
    toward 0), or None when the interval is empty."""
    lo, hi = Fraction(lo), Fraction(hi)
    if lo > hi or (lo == hi and not (include_lo and include_hi)):
        return None
    if lo == hi:
        return lo
    zmin = ceil(lo)
    if zmin == lo and not include_lo:
        zmin += 1
    zmax = floor(hi)
    if zmax == hi and not include_hi:
        zmax -= 1
    if zmin <= zmax:
        if zmin <= 0 <= zmax:
            return Fraction(0)
        return Fraction(zmin if zmin > 0 else zmax)
    # The interval sits strictly inside (n, n+1); recurse on reciprocals.
    n = floor(lo)
    lo_frac = lo - n
    hi_frac = hi - n
    if lo_frac == 0:
        # open at n: the reciprocal range is [1/hi_frac, infinity)
        y_lo = 1 / hi_frac
        y = ceil(y_lo)
        if y == y_lo and not include_hi:
            y += 1
        return n + Fraction(1, y)
    inner = simplest_between(1 / hi_frac, 1 / lo_frac, include_hi, include_lo)
    if inner is None:  # unreachable: open nonempty intervals contain rationals
        raise InvariantViolationError("reciprocal recursion lost the interval")
    return n + 1 / inner


def unique_bounded_rational(
    lo: Fraction,
    hi: Fraction,
    max_denominator: int,
    include_lo: bool = False,
    include_hi: bool = True,
) -> Fraction | None:
    """The single rational with denominator <= max_denominator in the
    interval, or None when there are zero or several."""
    cand = simplest_between(lo, hi, include_lo, include_hi)
    if cand is None or cand.denominator > max_denominator:
        return None
    left = simplest_between(lo, cand, include_lo, False)
    if left is not None and left.denominator <= max_denominator:
        return None
    right = simplest_between(cand, hi, False, include_hi)
    if right is not None and right.denominator <= max_denominator:
        return None
    return cand


def _search_min(pred: Predicate, lo: Fraction, hi: Fraction, max_denominator: int) -> Fraction:
    """Least true point of a monotone false-then-true predicate.

    pred(lo) is false, pred(hi) is true, so the boundary lies in (lo, hi];
    it is assumed to have denominator <= max_denominator.
    """
    max_probes = 4 * (hi - lo).numerator.bit_length() + 8 * max_denominator.bit_length() + 64
    for step in range(max_probes):
        answer = unique_bounded_rational(lo, hi, max_denominator, False, True)
        if answer is not None:
            return answer
        cand = simplest_between(lo, hi, False, False)
        point = cand if (step % 2 == 0 and cand is not None) else (lo + hi) / 2
        if pred(point):
            hi = point
        else:
            lo = point
    raise InvariantViolationError("rational boundary search did not converge")


def min_satisfying(pred: Predicate, lo: Fraction, hi: Fraction, max_denominator: int) -> Fraction:
    """Least x in [lo, hi] with pred(x), for pred monotone false-then-true.

    pred(hi) must hold; the boundary must have denominator <= max_denominator.
    """
    if pred(lo):
        return Fraction(lo)
    if not pred(hi):
        raise InvariantViolationError("predicate is false on the whole range")
    return _search_min(pred, Fraction(lo), Fraction(hi), max_denominator)


def max_satisfying(pred: Predicate, lo: Fraction, hi: Fraction, max_denominator: int) -> Fraction:
    """Greatest x in [lo, hi] with pred(x), for pred monotone true-then-false."""
    return -min_satisfying(lambda y: pred(-y), -Fraction(hi), -Fraction(lo), max_denominator)
