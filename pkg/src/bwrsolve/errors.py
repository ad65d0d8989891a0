"""Exception taxonomy for the solver.

Every failure mode callers are expected to handle gets its own class; all of
them derive from BwrError so library users can catch broadly.
"""

from __future__ import annotations


class BwrError(Exception):
    """Base class for all solver errors."""


class GameValidationError(BwrError):
    """A game violates a structural invariant."""


class TerminalPositionError(GameValidationError):
    """A position has no outgoing arc."""

    def __init__(self, position):
        self.position = position
        super().__init__(f"position {position} has out-degree 0")


class BadProbabilitySumError(GameValidationError):
    """Outgoing probabilities of a random position do not sum to 1."""

    def __init__(self, position, total):
        self.position = position
        self.total = total
        super().__init__(f"probabilities at position {position} sum to {total}, not 1")


class NonPositiveProbabilityError(GameValidationError):
    """A random arc carries a missing, zero, or negative probability."""

    def __init__(self, position, detail=""):
        self.position = position
        msg = f"non-positive or missing probability at position {position}"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)


class EmptyOutDegreeError(BwrError):
    """A restriction stripped every outgoing arc of a deterministic position."""

    def __init__(self, position):
        self.position = position
        super().__init__(f"restriction leaves position {position} with no arc")


class SingularSystemError(BwrError):
    """An exact linear solve hit a singular system that should be regular."""


class InfeasibleInputError(BwrError):
    """A caller passed a point outside the polyhedron it claims to be in."""


class InvariantViolationError(BwrError):
    """An internal invariant failed; indicates a bug, not bad input."""


class NotErgodicError(BwrError):
    """The game is not ergodic; carries the certifying partition."""

    def __init__(self, partition):
        self.partition = partition
        super().__init__("game is not ergodic")


class BudgetExceededError(BwrError):
    """Brute-force enumeration would exceed the situation budget."""

    def __init__(self, needed, budget):
        self.needed = needed
        self.budget = budget
        super().__init__(f"{needed} situations exceed budget {budget}")


class NoSaddleFoundError(BwrError):
    """Exhaustive search found no saddle point (impossible on valid games)."""


class NonTerminationError(BwrError):
    """Policy iteration exceeded its policy-count guard."""


class ExhaustedGuessesError(BwrError):
    """Every rank guess was rejected (impossible on valid games)."""


class GameFileError(BwrError):
    """A game file could not be parsed."""
