"""Brute-force ground truth for small games.

Everything here recomputes payoffs by walking the raw tree, deliberately
sharing no evaluation code with the strategy module, so the two can verify
each other.
"""

from __future__ import annotations

import itertools
from typing import Iterator, Mapping

from .errors import NOT_IDENTICAL_INTEREST, TOO_LARGE, GameError
from .tree import GameTree

PureProfile = dict[str, str]

DEFAULT_PROFILE_BOUND = 10**6


def _walk(game: GameTree, moves: Mapping[str, str]) -> str:
    """Follow a pure move assignment from the root to its terminal."""
    node = game.root()
    while not game.is_terminal(node):
        node = game.children(node)[moves[game.infoset_of(node)]]
    return node


def profile_count(game: GameTree) -> int:
    count = 1
    for s in game.infosets:
        count *= len(s.moves)
    return count


def enumerate_pure_profiles(game: GameTree) -> Iterator[PureProfile]:
    """All pure joint strategies, lexicographic in (infoset id, move label)."""
    ids = sorted(s.id for s in game.infosets)
    move_lists = [sorted(game.infoset(h).moves) for h in ids]
    for combo in itertools.product(*move_lists):
        yield dict(zip(ids, combo))


def brute_force_pure_equilibria(
    game: GameTree, eps: float = 1e-9, max_profiles: int = DEFAULT_PROFILE_BOUND
) -> list[PureProfile]:
    """Pure profiles no player can improve on by any unilateral pure change.

    For each candidate and each player, every pure strategy of that player is
    enumerated against the rest of the profile and the terminal payoffs are
    compared directly.
    """
    count = profile_count(game)
    if count > max_profiles:
        raise GameError(TOO_LARGE, f"{count} pure profiles exceeds bound {max_profiles}")

    by_player: dict[int, list[str]] = {}
    for s in game.infosets:
        by_player.setdefault(s.player, []).append(s.id)

    equilibria = []
    for profile in enumerate_pure_profiles(game):
        base = game.payoff(_walk(game, profile))
        stable = True
        for player in range(1, game.players + 1):
            own = by_player.get(player, [])
            if not own:
                continue
            options = [sorted(game.infoset(h).moves) for h in own]
            for combo in itertools.product(*options):
                trial = dict(profile)
                trial.update(zip(own, combo))
                if game.payoff(_walk(game, trial))[player - 1] > base[player - 1] + eps:
                    stable = False
                    break
            if not stable:
                break
        if stable:
            equilibria.append(profile)
    return equilibria


def global_optima(game: GameTree) -> set[str]:
    """Terminals maximizing the common payoff of an identical-interest game."""
    if not game.identical_interest:
        raise GameError(NOT_IDENTICAL_INTEREST, "global optima need a common payoff")
    best = max(game.common_payoff(z) for z in game.terminals)
    return {z for z in game.terminals if game.common_payoff(z) == best}
