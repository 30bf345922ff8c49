"""Repetition and locking diagnostics for inertia/fading-memory runs.

The central object is the deterministic map sending frequencies toward the
vertex of a repeated terminal: applying the one-round fading-memory update
``m`` times along the path to ``z`` sends f(a|h) to ``1 - (1-rho)**m * (1 -
f(a|h))`` for on-path pairs and scales the other moves by ``(1-rho)**m``.
From it derive the repetition count needed to clear the frequency threshold,
the locked-state level of a (frequencies, terminal) pair, forced-repetition
counts, and post-hoc event annotation of recorded traces.  Everything here is
pure analysis over immutable inputs; nothing feeds back into the dynamics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

from .errors import DEGENERATE_PAYOFFS, UNKNOWN_TERMINAL, GameError
from .engine import Snapshot, TraceRecord
from .strategy import TOL, BehaviorProfile, index_for
from .tree import GameMetrics, GameTree, frequency_threshold

INFINITE = math.inf


# ----------------------------------------------------------------------
# The iterated update map


def _check_terminal(idx, z: str) -> None:
    if z not in idx.terminal_num:
        raise GameError(UNKNOWN_TERMINAL, f"no terminal {z!r}")


def _apply_f_arrays(idx, freq: list[list[float]], z: str, m: int, rho: float) -> None:
    """In-place m-fold update of ``freq`` toward the vertex of ``z``."""
    if m == 0:
        return
    shrink = (1.0 - rho) ** m
    for j, k in idx.path_pairs[z]:
        row = freq[j]
        for i in range(len(row)):
            if i == k:
                row[i] = 1.0 - shrink * (1.0 - row[i])
            else:
                row[i] = shrink * row[i]


def apply_F(
    game: GameTree, f: BehaviorProfile, z: str, m: int, rho: float
) -> BehaviorProfile:
    """The m-fold repeated-play update of ``f`` along the path to ``z``.

    m = 0 is the identity; information sets off the path are unchanged.
    """
    if m < 0:
        raise GameError("BAD_PARAMETER", f"m must be >= 0, got {m}")
    idx = index_for(game)
    _check_terminal(idx, z)
    freq = idx.arrays(f)
    _apply_f_arrays(idx, freq, z, m, rho)
    return idx.profile(freq)


# ----------------------------------------------------------------------
# Repetition counts


def _require_distinct(metrics: GameMetrics) -> None:
    if not metrics.distinct_payoffs:
        raise GameError(DEGENERATE_PAYOFFS, "payoffs collide; repetition bounds undefined")


def _k_t_pairs(
    pairs: Sequence[tuple[int, int]],
    freq,
    rho: float,
    threshold: float,
    k_max: int,
) -> int:
    k = 0
    while True:
        shrink = (1.0 - rho) ** (k + 1)
        if all(
            shrink * freq[j][kk] + 1.0 - shrink >= threshold for j, kk in pairs
        ):
            return k
        k += 1
        if k > k_max:
            raise RuntimeError("repetition count exceeded its uniform bound")


def k_t(
    game: GameTree,
    f: BehaviorProfile,
    z: str,
    rho: float,
    metrics: GameMetrics,
) -> int:
    """Minimum number of repetitions of ``z`` after which every on-path
    frequency clears the threshold; bounded above by ``metrics.k_max``."""
    _require_distinct(metrics)
    idx = index_for(game)
    _check_terminal(idx, z)
    return _k_t_pairs(
        idx.path_pairs[z],
        idx.arrays(f),
        rho,
        frequency_threshold(metrics),
        metrics.k_max,
    )


# ----------------------------------------------------------------------
# Locked states


@dataclass(frozen=True)
class LockReport:
    """Locking depth of a (frequencies, terminal) pair.

    ``level`` is the largest tested ``l`` such that every on-path move stays a
    best reply after 1..l updates toward the vertex; ``at_cap`` means every
    tested level passed, read as "level >= cap".  ``limit_locked`` is the
    strict best-reply test at the limit profile with the whole path replaced
    by vertices.
    """

    terminal: str
    cap: int
    level: int
    at_cap: bool
    limit_locked: bool

    @property
    def display(self) -> str:
        return f">= {self.cap}" if self.at_cap else str(self.level)


def _lock_prefix(idx, freq, z: str, rho: float, tol: float, cap: int) -> tuple[int, bool]:
    """Largest l <= cap with on-path moves best replies after 1..l updates."""
    work = [row[:] for row in freq]
    pairs = idx.path_pairs[z]
    for level in range(1, cap + 1):
        _apply_f_arrays(idx, work, z, 1, rho)
        for j, k in pairs:
            vals = idx.move_values(work, j)
            if vals[k] < max(vals) - tol:
                return level - 1, False
    return cap, True


def _limit_locked(idx, freq, z: str, tol: float) -> bool:
    work = [row[:] for row in freq]
    pairs = idx.path_pairs[z]
    for j, k in pairs:
        row = work[j]
        for i in range(len(row)):
            row[i] = 1.0 if i == k else 0.0
    for j, k in pairs:
        vals = idx.move_values(work, j)
        rest = [v for i, v in enumerate(vals) if i != k]
        if rest and vals[k] <= max(rest) + tol:
            return False
    return True


def lock_level(
    game: GameTree,
    f: BehaviorProfile,
    z: str,
    rho: float,
    tol: float = TOL,
    l_cap: int = 1000,
) -> LockReport:
    """Test how many forced repetitions of ``z`` the pair (f, z) sustains.

    Finite-level iteration up to ``l_cap`` plus the strict limit test: this
    semi-decides membership in the set of fully locked states (no finite
    procedure decides it exactly).
    """
    idx = index_for(game)
    _check_terminal(idx, z)
    freq = idx.arrays(f)
    level, capped = _lock_prefix(idx, freq, z, rho, tol, l_cap)
    return LockReport(
        terminal=z,
        cap=l_cap,
        level=level,
        at_cap=capped,
        limit_locked=_limit_locked(idx, freq, z, tol),
    )


def m_t(
    game: GameTree,
    f: BehaviorProfile,
    z: str,
    rho: float,
    metrics: GameMetrics,
    tol: float = TOL,
    cap: int = 1000,
) -> float:
    """Forced repetitions of ``z`` following its repeat event: the locking
    prefix of the pair after k_t updates.  Returns ``math.inf`` when every
    level up to ``cap`` passes (read "at least cap")."""
    _require_distinct(metrics)
    idx = index_for(game)
    _check_terminal(idx, z)
    freq = idx.arrays(f)
    k = _k_t_pairs(
        idx.path_pairs[z], freq, rho, frequency_threshold(metrics), metrics.k_max
    )
    _apply_f_arrays(idx, freq, z, k, rho)
    level, capped = _lock_prefix(idx, freq, z, rho, tol, cap)
    return INFINITE if capped else float(level)


def p_min(
    game: GameTree,
    rho: float,
    alpha,
    metrics: GameMetrics,
) -> float:
    """Uniform lower bound on the probability that a maximal
    repeat-lock-deviate cascade starts at any round."""
    _require_distinct(metrics)
    idx = index_for(game)
    if isinstance(alpha, dict):
        values = [float(alpha[h]) for h in idx.infoset_ids]
    else:
        values = [float(alpha)] * len(idx.infoset_ids)
    a_min = min(values)
    one_minus = min(1.0 - a for a in values)
    exponent = metrics.l_max * (metrics.k_max + 1)
    return (one_minus * a_min**exponent) ** (metrics.num_terminals**2)


# ----------------------------------------------------------------------
# Event detection over recorded traces


@dataclass
class RepeatEvent:
    round: int
    terminal: str
    k: int
    m: Optional[float]  # None when not computed for this anchor
    repeat: bool
    repeat_lock: bool
    deviate: bool
    deviation_infoset: Optional[str] = None


@dataclass
class EventChain:
    """A cascade of single-deviation events at rounds t_0, t_1, ... where each
    t_{l+1} = t_l + K + m + 1; ``terminals`` holds z_{t_0}, ..., z_{t_n} plus
    the terminal reached by the final deviation.  ``maximal`` means the chain
    ends in a repeat event whose forced-repetition count hit the cap."""

    rounds: tuple[int, ...]
    terminals: tuple[str, ...]
    maximal: bool


@dataclass
class EventReport:
    events: list[RepeatEvent]
    chains: list[EventChain]


def _add_flag(record: TraceRecord, flag: str) -> None:
    record.events = (record.events or ()) + (flag,)


def detect_events(
    game: GameTree,
    records: Sequence[TraceRecord],
    snapshots: Sequence[Snapshot],
    rho: float,
    metrics: GameMetrics,
    tol: float = TOL,
    lock_cap: int = 1000,
) -> EventReport:
    """Annotate a trace with repeat / repeat-lock / repeat-lock-deviate events.

    ``snapshots[i]`` must be the start-of-round state for ``records[i]``.
    Flags are appended to each record's ``events`` tuple: "E" (enough
    repetitions of the round's terminal follow), "Ebar" (plus all forced
    repetitions observed), "Ehat" (followed by a single strictly-improving
    deviation that repeats the latest moves elsewhere), "M" (anchor of a
    maximal cascade), "LOCK" (forced repetitions hit the cap).
    """
    _require_distinct(metrics)
    if len(records) != len(snapshots):
        raise GameError("BAD_PARAMETER", "records and snapshots differ in length")
    idx = index_for(game)
    threshold = frequency_threshold(metrics)
    n = len(records)
    if n == 0:
        return EventReport([], [])
    base_round = records[0].round

    terminals = [r.terminal for r in records]
    # Constant-terminal blocks as index ranges [start, end].
    blocks: list[tuple[int, int]] = []
    start = 0
    for i in range(1, n + 1):
        if i == n or terminals[i] != terminals[i - 1]:
            blocks.append((start, i - 1))
            start = i
    k_of = [0] * n
    for i in range(n):
        k_of[i] = _k_t_pairs(
            idx.path_pairs[terminals[i]], snapshots[i].freq, rho, threshold, metrics.k_max
        )

    events: list[RepeatEvent] = []
    ehat_by_round: dict[int, RepeatEvent] = {}
    lock_rounds: set[int] = set()

    for bi, (s, e) in enumerate(blocks):
        final_block = bi == len(blocks) - 1
        for i in range(s, e + 1):
            k = k_of[i]
            repeat = (e - i) >= k
            if repeat:
                _add_flag(records[i], "E")
            if not repeat:
                continue
            ev = RepeatEvent(
                round=records[i].round,
                terminal=terminals[i],
                k=k,
                m=None,
                repeat=True,
                repeat_lock=False,
                deviate=False,
            )
            if final_block:
                # Only the block head gets the (expensive) forced-repetition
                # count; a capped count marks the absorbed suffix.
                if i == s:
                    freq = [list(row) for row in snapshots[i].freq]
                    _apply_f_arrays(idx, freq, terminals[i], k, rho)
                    level, capped = _lock_prefix(
                        idx, freq, terminals[i], rho, tol, lock_cap
                    )
                    ev.m = INFINITE if capped else float(level)
                    if capped:
                        _add_flag(records[i], "LOCK")
                        lock_rounds.add(records[i].round)
                    elif i + k + level <= e:
                        ev.repeat_lock = True
                        _add_flag(records[i], "Ebar")
                    events.append(ev)
                continue
            # Deviation happens at index e+1; a single-deviation event needs
            # the forced repetitions to end exactly at the block end.
            m_req = e - i - k
            freq = [list(row) for row in snapshots[i].freq]
            _apply_f_arrays(idx, freq, terminals[i], k, rho)
            level, capped = _lock_prefix(idx, freq, terminals[i], rho, tol, m_req + 1)
            if capped:
                # Forced repetitions outlast the observed block, so the
                # repeat-lock window was not observed here.
                ev.m = None
                events.append(ev)
                continue
            ev.m = float(level)
            ev.repeat_lock = True
            _add_flag(records[i], "Ebar")
            if level != m_req:
                # Chance repetitions padded the block beyond the forced ones;
                # the next terminal change is not a single-deviation round
                # for this anchor.
                events.append(ev)
                continue
            dev = _single_deviation_infoset(
                idx, snapshots, e, terminals[e], terminals[e + 1], tol
            )
            if dev is not None:
                ev.deviate = True
                ev.deviation_infoset = dev
                _add_flag(records[i], "Ehat")
                ehat_by_round[ev.round] = ev
            events.append(ev)

    chains = _assemble_chains(records, ehat_by_round, lock_rounds, base_round, events)
    for chain in chains:
        if chain.maximal:
            first = chain.rounds[0]
            _add_flag(records[first - base_round], "M")
    return EventReport(events=events, chains=chains)


def _single_deviation_infoset(
    idx, snapshots, e: int, z_old: str, z_new: str, tol: float
) -> Optional[str]:
    """Check the single strictly-improving deviation shape between the block's
    last round (index e) and the next round; returns the deviating set."""
    old_pairs = idx.path_pairs[z_old]
    new_pairs = idx.path_pairs[z_new]
    shared = 0
    while (
        shared < len(old_pairs)
        and shared < len(new_pairs)
        and old_pairs[shared] == new_pairs[shared]
    ):
        shared += 1
    if shared >= len(old_pairs) or shared >= len(new_pairs):
        return None  # one path is a prefix of the other: impossible in a tree
    j_bar, k_old = old_pairs[shared]
    j_new, k_new = new_pairs[shared]
    if j_bar != j_new or k_old == k_new:
        return None
    if e + 1 >= len(snapshots):
        return None
    after = snapshots[e + 1]  # start of the deviation round: f after round e
    # Moves below the deviation must repeat the latest moves.
    for j, k in new_pairs[shared + 1 :]:
        if after.last_moves[j] != k:
            return None
    vals = idx.move_values(after.freq, j_bar)
    if vals[k_new] <= vals[k_old] + tol:
        return None
    return idx.infoset_ids[j_bar]


def _assemble_chains(
    records, ehat_by_round, lock_rounds, base_round, events
) -> list[EventChain]:
    by_round = {ev.round: ev for ev in events}
    continuation: dict[int, int] = {}
    for t, ev in ehat_by_round.items():
        continuation[t] = int(t + ev.k + ev.m + 1)
    targets = set(continuation.values())
    chains = []
    for t0 in sorted(ehat_by_round):
        if t0 in targets:
            continue  # not a chain head
        rounds = [t0]
        terminals = [ehat_by_round[t0].terminal]
        t = t0
        while t in continuation:
            nxt = continuation[t]
            terminals.append(_terminal_at(records, base_round, nxt))
            if nxt in ehat_by_round:
                rounds.append(nxt)
                t = nxt
            else:
                t = nxt
                break
        maximal = t in lock_rounds or (
            t in by_round and by_round[t].repeat and by_round[t].m == INFINITE
        )
        chains.append(
            EventChain(
                rounds=tuple(rounds), terminals=tuple(terminals), maximal=maximal
            )
        )
    return chains


def _terminal_at(records, base_round: int, t: int) -> str:
    i = t - base_round
    return records[i].terminal if 0 <= i < len(records) else ""


# ----------------------------------------------------------------------
# Convergence metrics


@dataclass(frozen=True)
class ConvergenceSeries:
    """Sampled maximal gaps plus the length of the constant-terminal suffix."""

    samples: tuple[tuple[int, float], ...]
    path_stability: int


def convergence_metrics(
    game: GameTree, records: Sequence[TraceRecord], sample_every: int = 1
) -> ConvergenceSeries:
    """Max gap at every ``sample_every``-th gap-carrying record, and the
    longest suffix of rounds that reached one constant terminal."""
    with_gaps = [r for r in records if r.gaps]
    samples = tuple(
        (r.round, max(r.gaps.values()))
        for i, r in enumerate(with_gaps)
        if i % max(1, sample_every) == 0
    )
    stability = 0
    if records:
        last = records[-1].terminal
        for r in reversed(records):
            if r.terminal != last:
                break
            stability += 1
    return ConvergenceSeries(samples=samples, path_stability=stability)


def visit_gap_ratios(records: Sequence[TraceRecord], infoset: str) -> list[float]:
    """Ratios (t_{k+1} - t_k) / t_k between consecutive visit rounds of one
    information set.  Purely observational; no convergence claim attaches."""
    visits = [r.round for r in records if any(h == infoset for h, _ in r.path)]
    return [
        (b - a) / a for a, b in zip(visits, visits[1:])
    ]
