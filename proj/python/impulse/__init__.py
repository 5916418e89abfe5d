"""Two-player zero-sum stochastic games with impulse control.

Reports come back as plain dicts with the same layout as the CLI's JSON files.
"""

from ._impulse import (
    Game,
    GameFileError,
    duopoly_game,
    fit,
    game_from_dict,
    learn,
    load_game,
    oracle,
    random_game,
    simulate,
    solve,
    solve_budgeted,
)

__all__ = [
    "Game",
    "GameFileError",
    "duopoly_game",
    "fit",
    "game_from_dict",
    "learn",
    "load_game",
    "oracle",
    "random_game",
    "simulate",
    "solve",
    "solve_budgeted",
]
