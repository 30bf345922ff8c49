"""Repeated play: classic fictitious play and the inertia/fading-memory variant.

Each round walks the tree from the root.  At every reached information set
the mover picks a local best reply against the start-of-round frequencies
(classic), or repeats the previous move with the inertia probability when it
is no longer a best reply (ifm).  Frequency updates apply after the terminal
is reached: classic averages with step 1/visits, ifm moves a constant step
``rho`` toward the played vertex.  All randomness flows through one seeded
generator, drawn in root-to-leaf path order, so traces are reproducible
bit for bit.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Mapping, Optional, Union

from .errors import BAD_PARAMETER, GameError
from .strategy import TOL, BehaviorProfile, check_profile, index_for
from .tree import GameTree

CLASSIC = "classic"
IFM = "ifm"

LEXICOGRAPHIC = "lexicographic"
UNIFORM_RANDOM = "uniform-random"


@dataclass(slots=True)
class TraceRecord:
    """One round of play: the terminal reached and the (infoset, move) path.

    ``gaps`` is filled only at gap-recording rounds; ``events`` is filled by
    post-hoc event detection, never by the engine.
    """

    round: int
    terminal: str
    path: tuple[tuple[str, str], ...]
    gaps: Optional[dict[str, float]] = None
    events: Optional[tuple[str, ...]] = None

    def max_gap(self) -> Optional[float]:
        return max(self.gaps.values()) if self.gaps else None


@dataclass(frozen=True, slots=True)
class Snapshot:
    """Start-of-round state: frequencies f_t and the previous pure moves."""

    freq: tuple[tuple[float, ...], ...]
    last_moves: tuple[int, ...]


@dataclass
class LearnerState:
    """Evolving state of one learning run (confined to a single replication)."""

    mode: str
    round: int
    tie_break: str
    seed: int
    rho: Optional[float] = None
    alpha: Optional[list[float]] = None  # by infoset index
    rng: random.Random = field(repr=False, default_factory=random.Random)
    _index: object = field(repr=False, default=None)
    _game: object = field(repr=False, default=None)
    _freq: list[list[float]] = field(repr=False, default_factory=list)
    _counts: list[int] = field(repr=False, default_factory=list)
    _last: list[int] = field(repr=False, default_factory=list)

    @property
    def frequencies(self) -> BehaviorProfile:
        return self._index.profile(self._freq)

    @property
    def visit_counts(self) -> dict[str, int]:
        idx = self._index
        return {h: self._counts[j] for j, h in enumerate(idx.infoset_ids)}

    @property
    def last_moves(self) -> dict[str, str]:
        idx = self._index
        return {
            h: idx.moves[j][self._last[j]] for j, h in enumerate(idx.infoset_ids)
        }

    def snapshot(self) -> Snapshot:
        return Snapshot(
            freq=tuple(tuple(row) for row in self._freq),
            last_moves=tuple(self._last),
        )


def init_state(
    game: GameTree,
    mode: str,
    f1: Union[BehaviorProfile, str] = "uniform",
    a1: Union[Mapping[str, str], str] = "lexicographic",
    rho: Optional[float] = None,
    alpha: Union[float, Mapping[str, float], None] = None,
    tie_break: str = LEXICOGRAPHIC,
    seed: int = 0,
) -> LearnerState:
    """Build the round-1 state.

    ``f1`` is the arbitrary initial belief ("uniform" or an explicit
    profile); ``a1`` the initial pure moves ("lexicographic" picks the least
    move label at each set).  ifm mode requires ``rho`` and ``alpha`` in
    (0, 1); classic mode forbids them.
    """
    if mode not in (CLASSIC, IFM):
        raise GameError(BAD_PARAMETER, f"mode: unknown mode {mode!r}")
    if tie_break not in (LEXICOGRAPHIC, UNIFORM_RANDOM):
        raise GameError(BAD_PARAMETER, f"tie_break: unknown policy {tie_break!r}")
    idx = index_for(game)

    if mode == IFM:
        if rho is None or alpha is None:
            raise GameError(BAD_PARAMETER, "rho, alpha: required in ifm mode")
        if not (0.0 < rho < 1.0):
            raise GameError(BAD_PARAMETER, f"rho: must be in (0,1), got {rho}")
        if isinstance(alpha, Mapping):
            missing = set(idx.infoset_ids) - set(alpha)
            if missing:
                raise GameError(BAD_PARAMETER, f"alpha: missing {sorted(missing)}")
            alpha_list = [float(alpha[h]) for h in idx.infoset_ids]
        else:
            alpha_list = [float(alpha)] * len(idx.infoset_ids)
        if any(not (0.0 < a < 1.0) for a in alpha_list):
            raise GameError(BAD_PARAMETER, "alpha: every value must be in (0,1)")
    else:
        if rho is not None or alpha is not None:
            raise GameError(BAD_PARAMETER, "rho, alpha: ifm-only parameters")
        alpha_list = None

    if f1 == "uniform":
        freq = [[1.0 / len(ms)] * len(ms) for ms in idx.moves]
    else:
        check_profile(game, f1)
        freq = idx.arrays(f1)

    if a1 == "lexicographic":
        last = [min(range(len(ms)), key=ms.__getitem__) for ms in idx.moves]
    else:
        last = []
        for j, h in enumerate(idx.infoset_ids):
            move = a1[h]
            if move not in idx.move_num[j]:
                raise GameError(BAD_PARAMETER, f"a1: {move!r} not available at {h!r}")
            last.append(idx.move_num[j][move])

    return LearnerState(
        mode=mode,
        round=1,
        tie_break=tie_break,
        seed=seed,
        rho=rho,
        alpha=alpha_list,
        rng=random.Random(seed),
        _index=idx,
        _game=game,
        _freq=freq,
        _counts=[0] * len(idx.infoset_ids),
        _last=last,
    )


def _choose(idx, state, rng, j: int, best: list[int]) -> int:
    if len(best) == 1:
        return best[0]
    if state.tie_break == LEXICOGRAPHIC:
        for k in idx.lex_order[j]:
            if k in best:
                return k
    return best[rng.randrange(len(best))]


def play_round(
    game: GameTree, state: LearnerState, rng: Optional[random.Random] = None
) -> tuple[TraceRecord, LearnerState]:
    """Play one round and apply the frequency update; returns the record and
    the (mutated) state.  All decisions use the start-of-round frequencies."""
    idx = state._index
    if game is not state._game:
        # accept an equal game object once; reject a different game
        if index_for(game) is not idx:
            raise GameError(
                BAD_PARAMETER, "state was initialized for a different game"
            )
        state._game = game
    if rng is None:
        rng = state.rng
    freq = state._freq
    last = state._last
    ifm = state.mode == IFM
    tables = idx.round_tables(freq)

    node = idx.root
    path: list[tuple[int, int]] = []
    children = idx.node_children
    node_infoset = idx.node_infoset
    while node in node_infoset:
        j = node_infoset[node]
        vals = tables[j]
        cutoff = max(vals) - TOL
        best = [k for k, v in enumerate(vals) if v >= cutoff]
        if ifm:
            prev = last[j]
            if prev in best:
                k = prev
            elif rng.random() < state.alpha[j]:
                k = prev
            else:
                k = _choose(idx, state, rng, j, best)
        else:
            k = _choose(idx, state, rng, j, best)
        last[j] = k
        path.append((j, k))
        node = children[node][k]

    if ifm:
        rho = state.rho
        for j, k in path:
            state._counts[j] += 1
            row = freq[j]
            for m in range(len(row)):
                row[m] += rho * ((1.0 if m == k else 0.0) - row[m])
    else:
        counts = state._counts
        for j, k in path:
            counts[j] += 1
            step = 1.0 / counts[j]
            row = freq[j]
            for m in range(len(row)):
                row[m] += step * ((1.0 if m == k else 0.0) - row[m])

    record = TraceRecord(
        round=state.round,
        terminal=node,
        path=idx.path_pairs_ids[node],
    )
    state.round += 1
    return record, state


@dataclass
class RunResult:
    records: list[TraceRecord]
    state: LearnerState
    snapshots: Optional[list[Snapshot]] = None


def run(
    game: GameTree,
    state: LearnerState,
    rounds: int,
    rng: Optional[random.Random] = None,
    record_gaps: bool = False,
    gap_every: int = 1,
    collect_snapshots: bool = False,
    keep_records: bool = True,
) -> RunResult:
    """Play ``rounds`` rounds from ``state``.

    ``record_gaps`` attaches the per-infoset gap vector (against the
    start-of-round frequencies) to every ``gap_every``-th record; this costs
    a full evaluation per infoset per sampled round, so it is off by default.
    ``collect_snapshots`` stores the start-of-round state for every round,
    which event detection needs.  Deterministic given the state's seed and
    arguments.
    """
    if rounds < 1:
        raise GameError(BAD_PARAMETER, f"rounds: must be >= 1, got {rounds}")
    if gap_every < 1:
        raise GameError(BAD_PARAMETER, f"gap_every: must be >= 1, got {gap_every}")
    records: list[TraceRecord] = []
    snapshots: Optional[list[Snapshot]] = [] if collect_snapshots else None
    for _ in range(rounds):
        if collect_snapshots:
            snapshots.append(state.snapshot())
        want_gaps = record_gaps and state.round % gap_every == 0
        gaps = all_gaps(game, state) if want_gaps else None
        record, state = play_round(game, state, rng)
        if gaps is not None:
            record.gaps = gaps
        if keep_records:
            records.append(record)
    return RunResult(records=records, state=state, snapshots=snapshots)


def all_gaps(game: GameTree, state: LearnerState) -> dict[str, float]:
    """Optimality gap at every information set against the current frequencies."""
    idx = state._index
    tables = idx.round_tables(state._freq)
    out = {}
    for j, h in enumerate(idx.infoset_ids):
        vals = tables[j]
        row = state._freq[j]
        base = 0.0
        for k, v in enumerate(vals):
            base += row[k] * v
        g = max(vals) - base
        out[h] = 0.0 if -1e-12 <= g < 0.0 else g
    return out


def max_gap(game: GameTree, state: LearnerState) -> float:
    """Largest optimality gap over all information sets at the current state."""
    return max(all_gaps(game, state).values())
