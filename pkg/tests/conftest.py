from __future__ import annotations

import random
from pathlib import Path

import pytest

from fplab import BehaviorProfile, GameTree, gamefile

FIXTURES = Path(__file__).parent / "fixtures"

CORPUS = [
    "coord",
    "single",
    "chain3",
    "twostage",
    "forkstage",
    "gift",
    "mixedsucc",
    "gate",
    "allsame",
    "bos",
]


def load_game(name: str) -> GameTree:
    text = (FIXTURES / f"{name}.game").read_text(encoding="utf-8")
    result = gamefile.parse(text)
    assert result.ok, result.diagnostics
    return gamefile.to_game(result.spec)


def fixture_text(name: str) -> str:
    return (FIXTURES / f"{name}.game").read_text(encoding="utf-8")


def random_profile(game: GameTree, rng: random.Random) -> BehaviorProfile:
    probs = {}
    for s in game.infosets:
        weights = [rng.random() + 1e-6 for _ in s.moves]
        total = sum(weights)
        probs[s.id] = {a: w / total for a, w in zip(s.moves, weights)}
    return BehaviorProfile(probs)


@pytest.fixture(scope="session")
def coord() -> GameTree:
    return load_game("coord")


@pytest.fixture(scope="session")
def single() -> GameTree:
    return load_game("single")


@pytest.fixture(scope="session")
def chain3() -> GameTree:
    return load_game("chain3")


@pytest.fixture(scope="session")
def twostage() -> GameTree:
    return load_game("twostage")


@pytest.fixture(scope="session")
def forkstage() -> GameTree:
    return load_game("forkstage")


@pytest.fixture(scope="session")
def gift() -> GameTree:
    return load_game("gift")


@pytest.fixture(scope="session")
def mixedsucc() -> GameTree:
    return load_game("mixedsucc")


@pytest.fixture(scope="session")
def gate() -> GameTree:
    return load_game("gate")


@pytest.fixture(scope="session")
def allsame() -> GameTree:
    return load_game("allsame")


@pytest.fixture(scope="session")
def bos() -> GameTree:
    return load_game("bos")
