"""Behavior strategies and exact evaluation of strategic quantities.

Evaluation runs over a compiled per-game index: for each information set the
terminals reachable through it are tabulated with their root-path probability
factors, split into the factor at the set itself and the factors elsewhere.
This makes local payoffs, optimality gaps and best replies a single pass over
small precomputed lists, which the learning engine reuses every round.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Mapping, NamedTuple, Optional

from .errors import (
    BAD_PARAMETER,
    UNKNOWN_INFOSET,
    UNKNOWN_MOVE,
    UNKNOWN_NODE,
    UNKNOWN_PLAYER,
    UNKNOWN_TERMINAL,
    GameError,
)
from .tree import GameTree

TOL = 1e-9  # default absolute tolerance for best-reply ties and gap tests
_SUM_TOL = 1e-12


@dataclass(frozen=True)
class BehaviorProfile:
    """A joint behavior strategy: one probability distribution per information set.

    ``probs`` maps infoset id -> {move label -> probability}.  Each
    distribution must cover exactly the set's move list and sum to one within
    1e-12; :func:`check_profile` enforces this at API boundaries.
    """

    probs: Mapping[str, Mapping[str, float]]

    @classmethod
    def uniform(cls, game: GameTree) -> "BehaviorProfile":
        return cls(
            {
                s.id: {a: 1.0 / len(s.moves) for a in s.moves}
                for s in game.infosets
            }
        )

    @classmethod
    def pure(cls, game: GameTree, moves: Mapping[str, str]) -> "BehaviorProfile":
        """Vertex profile playing ``moves[h]`` with probability one at each set."""
        table = {}
        for s in game.infosets:
            chosen = moves[s.id]
            if chosen not in s.moves:
                raise GameError(UNKNOWN_MOVE, f"{chosen!r} not available at {s.id!r}")
            table[s.id] = {a: (1.0 if a == chosen else 0.0) for a in s.moves}
        return cls(table)

    def prob(self, h: str, a: str) -> float:
        return self.probs[h][a]

    def replace(self, h: str, dist: Mapping[str, float]) -> "BehaviorProfile":
        table = {k: dict(v) for k, v in self.probs.items()}
        table[h] = dict(dist)
        return BehaviorProfile(table)


def check_profile(game: GameTree, f: BehaviorProfile) -> None:
    """Raise BAD_PARAMETER unless ``f`` is a valid profile for ``game``."""
    ids = {s.id for s in game.infosets}
    if set(f.probs) != ids:
        raise GameError(BAD_PARAMETER, "profile domain differs from the game's infosets")
    for s in game.infosets:
        dist = f.probs[s.id]
        if set(dist) != set(s.moves):
            raise GameError(BAD_PARAMETER, f"profile at {s.id!r} has wrong move support")
        total = math.fsum(dist.values())
        if abs(total - 1.0) > _SUM_TOL or any(p < 0.0 or p > 1.0 for p in dist.values()):
            raise GameError(BAD_PARAMETER, f"profile at {s.id!r} is not a distribution")


# ----------------------------------------------------------------------
# Compiled evaluation index


class GameIndex:
    """Per-game tables for fast repeated evaluation (internal).

    Information sets are numbered in lexicographic id order; moves keep their
    declared order.  For infoset j and move k, ``in_terms[j][k]`` lists
    ``(u_owner(z), pairs)`` over terminals z reachable from j via k, where
    ``pairs`` are the (infoset, move) index pairs on z's root path excluding
    the pair at j itself.  ``out_terms[j]`` covers terminals not reachable
    through j, with full root-path pairs.
    """

    __slots__ = (
        "game",
        "infoset_ids",
        "infoset_num",
        "moves",
        "move_num",
        "owner",
        "root",
        "node_infoset",
        "node_children",
        "terminal_ids",
        "terminal_num",
        "payoff_vec",
        "path_pairs",
        "path_pairs_ids",
        "node_pairs",
        "in_terms",
        "out_terms",
        "num_nodes",
        "topo_down",
        "topo_up",
        "value_index",
        "term_values",
        "member_cols",
        "lex_order",
        "round_tables",
    )

    def __init__(self, game: GameTree):
        self.game = game
        self.infoset_ids = [s.id for s in game.infosets]
        self.infoset_num = {h: j for j, h in enumerate(self.infoset_ids)}
        self.moves = [game.infoset(h).moves for h in self.infoset_ids]
        self.move_num = [
            {a: k for k, a in enumerate(ms)} for ms in self.moves
        ]
        self.owner = [game.infoset(h).player for h in self.infoset_ids]
        self.root = game.root()

        self.node_infoset: dict[str, int] = {}
        self.node_children: dict[str, list[str]] = {}
        self.node_pairs: dict[str, tuple[tuple[int, int], ...]] = {self.root: ()}
        self.terminal_ids: list[str] = []
        self.payoff_vec: dict[str, tuple[float, ...]] = {}
        self.path_pairs: dict[str, tuple[tuple[int, int], ...]] = {}
        self.path_pairs_ids: dict[str, tuple[tuple[str, str], ...]] = {}

        stack = [self.root]
        while stack:
            n = stack.pop()
            if game.is_terminal(n):
                self.terminal_ids.append(n)
                self.payoff_vec[n] = game.payoff(n)
                self.path_pairs[n] = self.node_pairs[n]
                continue
            j = self.infoset_num[game.infoset_of(n)]
            self.node_infoset[n] = j
            kids = game.children(n)
            ordered = [kids[a] for a in self.moves[j]]
            self.node_children[n] = ordered
            for k, child in enumerate(ordered):
                self.node_pairs[child] = self.node_pairs[n] + ((j, k),)
                stack.append(child)
        self.terminal_ids.sort()
        self.terminal_num = {z: i for i, z in enumerate(self.terminal_ids)}
        for z, pairs in self.path_pairs.items():
            self.path_pairs_ids[z] = tuple(
                (self.infoset_ids[j], self.moves[j][k]) for j, k in pairs
            )

        nsets = len(self.infoset_ids)
        self.in_terms: list[list[list[tuple[float, tuple[tuple[int, int], ...]]]]] = [
            [[] for _ in self.moves[j]] for j in range(nsets)
        ]
        self.out_terms: list[list[tuple[float, tuple[tuple[int, int], ...]]]] = [
            [] for _ in range(nsets)
        ]
        for z in self.terminal_ids:
            pairs = self.path_pairs[z]
            on_path = {j for j, _ in pairs}
            for j in range(nsets):
                u = self.payoff_vec[z][self.owner[j] - 1]
                if j in on_path:
                    k = next(k for jj, k in pairs if jj == j)
                    rest = tuple(p for p in pairs if p[0] != j)
                    self.in_terms[j][k].append((u, rest))
                else:
                    self.out_terms[j].append((u, pairs))

        self._build_pass_tables(game)

    def _build_pass_tables(self, game: GameTree) -> None:
        """Integer-node tables for the two-pass per-round evaluator.

        Nodes are numbered in a parents-first order; one top-down reach pass
        and one bottom-up subtree-value pass per payoff component then give
        every information set's vertex-replacement values as
        sum over members of reach(member) * value(child(member, move)).
        """
        from collections import deque

        order: list[str] = []
        num: dict[str, int] = {}
        queue = deque([self.root])
        while queue:
            n = queue.popleft()
            num[n] = len(order)
            order.append(n)
            if n in self.node_children:
                queue.extend(self.node_children[n])
        self.num_nodes = len(order)

        down = []
        for n in order:
            if n in self.node_children:
                j = self.node_infoset[n]
                pairs = tuple(
                    (num[c], k) for k, c in enumerate(self.node_children[n])
                )
                down.append((j, num[n], pairs))
        self.topo_down = tuple(down)
        self.topo_up = tuple(reversed(down))

        owners = sorted(set(self.owner))
        if game.identical_interest:
            slot_of = {p: 0 for p in owners}
            needed = [owners[0]] if owners else []
        else:
            slot_of = {p: i for i, p in enumerate(owners)}
            needed = owners
        self.value_index = [slot_of[p] for p in self.owner]
        self.term_values: list[list[float]] = []
        for p in needed:
            base = [0.0] * self.num_nodes
            for z in self.terminal_ids:
                base[num[z]] = self.payoff_vec[z][p - 1]
            self.term_values.append(base)

        # member_cols[j][k]: (member node, child under move k) integer pairs
        self.member_cols: list[tuple[tuple[tuple[int, int], ...], ...]] = []
        for j, h in enumerate(self.infoset_ids):
            members = game.members(h)
            cols = []
            for k in range(len(self.moves[j])):
                cols.append(
                    tuple((num[n], num[self.node_children[n][k]]) for n in members)
                )
            self.member_cols.append(tuple(cols))

        self.lex_order = [
            tuple(sorted(range(len(ms)), key=ms.__getitem__)) for ms in self.moves
        ]

        self.round_tables = self._compile_round_tables(order, num)

    def _compile_round_tables(self, order: list[str], num: dict[str, int]):
        """Generate a flat evaluator computing every infoset's move values.

        The per-round reach and subtree-value passes are unrolled into
        straight-line local arithmetic specialized to this game, which the
        engine calls once per round.  Semantically identical to fill_passes
        followed by pass_move_values at every infoset (a property test pins
        the two together).
        """
        is_decision = set(self.node_infoset)
        reach_expr: dict[int, str] = {num[self.root]: ""}
        lines = ["def round_tables(freq):"]
        for j in range(len(self.infoset_ids)):
            lines.append(f"    f{j} = freq[{j}]")
        for n in order:
            if n not in is_decision:
                continue
            j = self.node_infoset[n]
            base = reach_expr[num[n]]
            for k, child in enumerate(self.node_children[n]):
                factor = f"f{j}[{k}]"
                expr = factor if not base else f"{base}*{factor}"
                c = num[child]
                if child in is_decision:
                    # reach reused by every member column below; bind it
                    lines.append(f"    r{c} = {expr}")
                    reach_expr[c] = f"r{c}"
                else:
                    reach_expr[c] = expr

        def value_ref(slot: int, node: str) -> str:
            if node in is_decision:
                return f"v{slot}_{num[node]}"
            return repr(self.term_values[slot][num[node]])

        slots = sorted(set(self.value_index))
        for slot in slots:
            for n in reversed(order):
                if n not in is_decision:
                    continue
                j = self.node_infoset[n]
                terms = [
                    f"f{j}[{k}]*{value_ref(slot, child)}"
                    for k, child in enumerate(self.node_children[n])
                ]
                lines.append(f"    v{slot}_{num[n]} = {' + '.join(terms)}")

        tuples = []
        for j, h in enumerate(self.infoset_ids):
            slot = self.value_index[j]
            col_exprs = []
            for k in range(len(self.moves[j])):
                parts = []
                for n in self.game.members(h):
                    r = reach_expr[num[n]]
                    v = value_ref(slot, self.node_children[n][k])
                    parts.append(v if not r else f"{r}*{v}")
                col_exprs.append(" + ".join(parts))
            tuples.append("(" + ", ".join(col_exprs) + ("," if len(col_exprs) == 1 else "") + ")")
        lines.append("    return (" + ", ".join(tuples) + ("," if len(tuples) == 1 else "") + ")")

        namespace: dict = {}
        exec("\n".join(lines), namespace)  # noqa: S102 (generated from our own tables)
        return namespace["round_tables"]

    # -- per-round pass evaluation (engine hot path) ------------------------

    def make_workspace(self) -> tuple[list[float], list[list[float]]]:
        reach = [0.0] * self.num_nodes
        values = [list(base) for base in self.term_values]
        return reach, values

    def fill_passes(self, freq, workspace) -> None:
        """Populate reach (top-down) and subtree values (bottom-up) under freq."""
        reach, values = workspace
        reach[0] = 1.0
        for j, where, pairs in self.topo_down:
            r = reach[where]
            row = freq[j]
            for child, k in pairs:
                reach[child] = r * row[k]
        for value in values:
            for j, where, pairs in self.topo_up:
                row = freq[j]
                v = 0.0
                for child, k in pairs:
                    v += row[k] * value[child]
                value[where] = v

    def pass_move_values(self, workspace, j: int) -> list[float]:
        """Vertex-replacement values at infoset j from filled passes; matches
        move_values up to floating-point association order."""
        reach, values = workspace
        value = values[self.value_index[j]]
        out = []
        for col in self.member_cols[j]:
            s = 0.0
            for n, c in col:
                s += reach[n] * value[c]
            out.append(s)
        return out

    def pass_best_replies(self, workspace, j: int, tol: float = TOL) -> list[int]:
        vals = self.pass_move_values(workspace, j)
        cutoff = max(vals) - tol
        return [k for k, v in enumerate(vals) if v >= cutoff]

    def pass_gap(self, workspace, freq, j: int) -> float:
        vals = self.pass_move_values(workspace, j)
        row = freq[j]
        base = 0.0
        for k, v in enumerate(vals):
            base += row[k] * v
        g = max(vals) - base
        if g < 0.0:
            return 0.0 if g >= -1e-12 else g
        return g

    # -- array conversions ------------------------------------------------

    def arrays(self, f: BehaviorProfile) -> list[list[float]]:
        return [
            [f.probs[h][a] for a in self.moves[j]]
            for j, h in enumerate(self.infoset_ids)
        ]

    def profile(self, arrays: list[list[float]]) -> BehaviorProfile:
        return BehaviorProfile(
            {
                h: {a: arrays[j][k] for k, a in enumerate(self.moves[j])}
                for j, h in enumerate(self.infoset_ids)
            }
        )

    # -- core evaluations --------------------------------------------------

    def move_values(self, freq, j: int) -> list[float]:
        """Per-move expected payoff over terminals reachable through infoset j,
        holding all other sets at ``freq`` (the vertex-replacement values)."""
        out = []
        for terms in self.in_terms[j]:
            s = 0.0
            for u, pairs in terms:
                p = u
                for jj, kk in pairs:
                    p *= freq[jj][kk]
                s += p
            out.append(s)
        return out

    def out_value(self, freq, j: int) -> float:
        s = 0.0
        for u, pairs in self.out_terms[j]:
            p = u
            for jj, kk in pairs:
                p *= freq[jj][kk]
            s += p
        return s

    def gap_value(self, freq, j: int) -> float:
        vals = self.move_values(freq, j)
        row = freq[j]
        base = 0.0
        for k, v in enumerate(vals):
            base += row[k] * v
        g = max(vals) - base
        if g < 0.0:
            return 0.0 if g >= -1e-12 else g  # below -1e-12 indicates a bug
        return g

    def best_reply_indices(self, freq, j: int, tol: float = TOL) -> list[int]:
        vals = self.move_values(freq, j)
        cutoff = max(vals) - tol
        return [k for k, v in enumerate(vals) if v >= cutoff]

    def expected_value(self, freq, player: int) -> float:
        total = 0.0
        for z in self.terminal_ids:
            p = self.payoff_vec[z][player - 1]
            for jj, kk in self.path_pairs[z]:
                p *= freq[jj][kk]
            total += p
        return total

    def reach_value(self, freq, node: str) -> float:
        p = 1.0
        for jj, kk in self.node_pairs[node]:
            p *= freq[jj][kk]
        return p


@lru_cache(maxsize=None)
def index_for(game: GameTree) -> GameIndex:
    return GameIndex(game)


# ----------------------------------------------------------------------
# Public operations


def reach_probability(game: GameTree, f: BehaviorProfile, node: str) -> float:
    """Probability of reaching ``node``: the product of f(a|h) over the
    (h, a) pairs on its root path.  The root has reach probability one."""
    idx = index_for(game)
    if node not in idx.node_pairs:
        raise GameError(UNKNOWN_NODE, f"no node {node!r}")
    return idx.reach_value(idx.arrays(f), node)


def reach_probability_infoset(game: GameTree, f: BehaviorProfile, h: str) -> float:
    """Probability of reaching information set ``h`` (sum over member nodes;
    disjoint events under perfect recall)."""
    idx = index_for(game)
    if h not in idx.infoset_num:
        raise GameError(UNKNOWN_INFOSET, f"no information set {h!r}")
    freq = idx.arrays(f)
    return sum(idx.reach_value(freq, n) for n in game.members(h))


def expected_payoff(game: GameTree, f: BehaviorProfile, player: int) -> float:
    """Expected payoff to ``player`` (1-based) under profile ``f``."""
    if not (1 <= player <= game.players):
        raise GameError(UNKNOWN_PLAYER, f"no player {player}")
    idx = index_for(game)
    return idx.expected_value(idx.arrays(f), player)


def _resolve(idx: GameIndex, h: str) -> int:
    if h not in idx.infoset_num:
        raise GameError(UNKNOWN_INFOSET, f"no information set {h!r}")
    return idx.infoset_num[h]


def local_payoff(game: GameTree, f: BehaviorProfile, h: str, a: str) -> float:
    """Expected payoff to h's owner when f(.|h) is replaced by the vertex on
    ``a`` and everything else plays ``f``."""
    idx = index_for(game)
    j = _resolve(idx, h)
    if a not in idx.move_num[j]:
        raise GameError(UNKNOWN_MOVE, f"{a!r} not available at {h!r}")
    freq = idx.arrays(f)
    k = idx.move_num[j][a]
    return idx.move_values(freq, j)[k] + idx.out_value(freq, j)


def optimality_gap(game: GameTree, f: BehaviorProfile, h: str) -> float:
    """Best single-move improvement available at ``h`` against ``f``.

    Always nonnegative; values in [-1e-12, 0] from floating-point noise are
    clamped to zero.  Evaluated over the terminals reachable through ``h``
    (terms elsewhere cancel between the two expectations).
    """
    idx = index_for(game)
    j = _resolve(idx, h)
    return idx.gap_value(idx.arrays(f), j)


def best_replies(
    game: GameTree, f: BehaviorProfile, h: str, tol: float = TOL
) -> set[str]:
    """Moves at ``h`` within ``tol`` of the best vertex-replacement value."""
    idx = index_for(game)
    j = _resolve(idx, h)
    ks = idx.best_reply_indices(idx.arrays(f), j, tol)
    return {idx.moves[j][k] for k in ks}


def replace_along_path(game: GameTree, f: BehaviorProfile, z: str) -> BehaviorProfile:
    """Profile agreeing with ``f`` except that every (h, a) pair on the path
    to terminal ``z`` is replaced by the vertex on ``a``; ``z`` is then
    reached with probability one."""
    idx = index_for(game)
    if z not in idx.terminal_num:
        raise GameError(UNKNOWN_TERMINAL, f"no terminal {z!r}")
    out = f
    for h, a in idx.path_pairs_ids[z]:
        moves = game.infoset(h).moves
        out = out.replace(h, {m: (1.0 if m == a else 0.0) for m in moves})
    return out


class EquilibriumResult(NamedTuple):
    ok: bool
    witness: Optional[tuple[str, str, float]]  # (infoset, move, gain)


def is_equilibrium(
    game: GameTree, f: BehaviorProfile, eps: float = TOL
) -> EquilibriumResult:
    """Gap test over every information set (one-shot-deviation form).

    True iff the optimality gap at every set is at most ``eps``.  On failure
    the witness is the first offending set (lexicographic order) with a move
    improving by more than ``eps``.
    """
    idx = index_for(game)
    freq = idx.arrays(f)
    for j, h in enumerate(idx.infoset_ids):
        vals = idx.move_values(freq, j)
        base = sum(freq[j][k] * v for k, v in enumerate(vals))
        best_k = max(range(len(vals)), key=vals.__getitem__)
        gain = vals[best_k] - base
        if gain > eps:
            return EquilibriumResult(False, (h, idx.moves[j][best_k], gain))
    return EquilibriumResult(True, None)
