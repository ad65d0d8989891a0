"""Exact solver for stochastic mean-payoff games on White/Black/Random graphs."""

from .game import (
    Arc,
    Game,
    GameParams,
    Owner,
    Potential,
    Situation,
    make_game,
    validate,
)

__all__ = [
    "Arc",
    "Game",
    "GameParams",
    "Owner",
    "Potential",
    "Situation",
    "make_game",
    "validate",
]
