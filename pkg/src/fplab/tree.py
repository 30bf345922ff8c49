"""Finite extensive-form game trees with information sets.

A :class:`GameTree` is a plain immutable record of the declared structure:
nodes, the information-set partition of decision nodes, edges, and terminal
payoffs.  Construction does not enforce consistency; :func:`validate` checks
every structural invariant (including perfect recall) and reports violations
with machine-readable codes, so defective candidates can be inspected rather
than rejected at construction time.  All other operations in the package
assume a tree that validates cleanly.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Sequence

from .errors import (
    BAD_PARAMETER,
    DEGENERATE_PAYOFFS,
    NOT_IDENTICAL_INTEREST,
    GameError,
)

DECISION = "decision"
TERMINAL = "terminal"


@dataclass(frozen=True)
class Infoset:
    """An information set: owning player and the move list shared by its nodes."""

    id: str
    player: int  # 1-based
    moves: tuple[str, ...]


@dataclass(frozen=True)
class Edge:
    parent: str
    move: str
    child: str


@dataclass(frozen=True)
class GameTree:
    """Immutable extensive-form game.

    Fields hold the raw declarations; derived lookup maps are cached at
    construction.  ``node_infosets`` assigns each decision node to its
    information set; ``terminals`` lists terminal node ids; ``payoffs`` maps
    terminal ids to per-player payoff vectors.  ``identical_interest`` is true
    when every payoff vector has equal components.
    """

    players: int
    infosets: tuple[Infoset, ...]
    node_infosets: tuple[tuple[str, str], ...]
    terminals: tuple[str, ...]
    edges: tuple[Edge, ...]
    payoffs: tuple[tuple[str, tuple[float, ...]], ...]
    identical_interest: bool

    def __post_init__(self) -> None:
        object.__setattr__(self, "_infoset_by_id", {s.id: s for s in self.infosets})
        object.__setattr__(self, "_infoset_of", dict(self.node_infosets))
        object.__setattr__(self, "_payoff_of", dict(self.payoffs))
        children: dict[str, dict[str, str]] = {}
        parents: dict[str, list[tuple[str, str]]] = {}
        duplicates: list[Edge] = []
        for e in self.edges:
            slot = children.setdefault(e.parent, {})
            if e.move in slot:
                duplicates.append(e)
            else:
                slot[e.move] = e.child
            parents.setdefault(e.child, []).append((e.parent, e.move))
        object.__setattr__(self, "_children", children)
        object.__setattr__(self, "_parents", parents)
        object.__setattr__(self, "_duplicate_edges", tuple(duplicates))
        members: dict[str, list[str]] = {s.id: [] for s in self.infosets}
        for node, h in self.node_infosets:
            if h in members:
                members[h].append(node)
        object.__setattr__(
            self, "_members", {h: tuple(sorted(ns)) for h, ns in members.items()}
        )

    # ------------------------------------------------------------------
    # Construction

    @classmethod
    def build(
        cls,
        players: int,
        infosets: Mapping[str, tuple[int, Sequence[str]]],
        nodes: Mapping[str, str],
        edges: Iterable[tuple[str, str, str]],
        payoffs: Mapping[str, float | Sequence[float]],
        terminals: Optional[Iterable[str]] = None,
    ) -> "GameTree":
        """Assemble a tree from mappings, in canonical (sorted) order.

        A scalar payoff is broadcast to all players.  ``terminals`` defaults
        to the payoff keys; pass it explicitly to construct a defective tree
        (e.g. a terminal with a missing payoff) for validation tests.
        """
        vecs: dict[str, tuple[float, ...]] = {}
        for z, val in payoffs.items():
            if isinstance(val, (int, float)):
                vecs[z] = (float(val),) * players
            else:
                vecs[z] = tuple(float(v) for v in val)
        term_ids = tuple(sorted(terminals if terminals is not None else vecs))
        identical = all(
            all(v == vec[0] for v in vec) for vec in vecs.values()
        )
        return cls(
            players=players,
            infosets=tuple(
                Infoset(h, player, tuple(moves))
                for h, (player, moves) in sorted(infosets.items())
            ),
            node_infosets=tuple(sorted(nodes.items())),
            terminals=term_ids,
            edges=tuple(Edge(p, m, c) for p, m, c in sorted(edges)),
            payoffs=tuple(sorted(vecs.items())),
            identical_interest=identical,
        )

    # ------------------------------------------------------------------
    # Accessors (meaningful only on trees that validate cleanly, except
    # where noted)

    def infoset(self, h: str) -> Infoset:
        try:
            return self._infoset_by_id[h]
        except KeyError:
            raise GameError("UNKNOWN_INFOSET", f"no information set {h!r}") from None

    def has_infoset(self, h: str) -> bool:
        return h in self._infoset_by_id

    def infoset_of(self, node: str) -> str:
        return self._infoset_of[node]

    def members(self, h: str) -> tuple[str, ...]:
        return self._members[h]

    def decision_ids(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.node_infosets)

    def node_ids(self) -> tuple[str, ...]:
        return tuple(sorted(self._infoset_of.keys() | set(self.terminals)))

    def is_terminal(self, node: str) -> bool:
        return node in self._payoff_of or node in set(self.terminals)

    def children(self, node: str) -> Mapping[str, str]:
        return self._children.get(node, {})

    def parent(self, node: str) -> Optional[tuple[str, str]]:
        links = self._parents.get(node)
        return links[0] if links else None

    def roots(self) -> tuple[str, ...]:
        declared = self._infoset_of.keys() | set(self.terminals)
        return tuple(sorted(n for n in declared if n not in self._parents))

    def root(self) -> str:
        roots = self.roots()
        if len(roots) != 1:
            raise GameError("UNKNOWN_NODE", f"tree has {len(roots)} roots")
        return roots[0]

    def payoff(self, z: str) -> tuple[float, ...]:
        try:
            return self._payoff_of[z]
        except KeyError:
            raise GameError("UNKNOWN_TERMINAL", f"no terminal {z!r}") from None

    def common_payoff(self, z: str) -> float:
        return self.payoff(z)[0]


# ----------------------------------------------------------------------
# Validation


@dataclass(frozen=True)
class Violation:
    code: str
    subject: str
    message: str


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...]

    @property
    def ok(self) -> bool:
        return not self.violations

    def codes(self) -> tuple[str, ...]:
        return tuple(v.code for v in self.violations)


# Codes emitted by validate(); structural ones gate the path-based checks.
_STRUCTURAL = {
    "BAD_PLAYER_COUNT",
    "DUPLICATE_NODE",
    "UNKNOWN_INFOSET",
    "EMPTY_INFOSET",
    "EMPTY_MOVES",
    "DUPLICATE_MOVE",
    "UNDECLARED_NODE",
    "CHILD_OF_TERMINAL",
    "DUPLICATE_EDGE",
    "MULTIPLE_PARENTS",
    "NO_ROOT",
    "MULTIPLE_ROOTS",
    "UNREACHABLE_NODE",
    "MISSING_CHILD",
    "EXTRA_CHILD",
}


def validate(game: GameTree) -> ValidationReport:
    """Check every structural invariant; an empty report means a valid game.

    Accepts arbitrary candidate structures and never raises.  Perfect recall
    is checked via player experiences: all nodes of an information set owned
    by player ``i`` must present the same sequence of (information set, move)
    pairs of player ``i`` along their root paths, and no root path may cross
    an information set twice.
    """
    out: list[Violation] = []

    def add(code: str, subject: str, message: str) -> None:
        out.append(Violation(code, subject, message))

    if game.players < 1:
        add("BAD_PLAYER_COUNT", str(game.players), "player count must be >= 1")

    decision_ids = set(n for n, _ in game.node_infosets)
    terminal_ids = set(game.terminals)
    for n in sorted(decision_ids & terminal_ids):
        add("DUPLICATE_NODE", n, "declared as both decision node and terminal")

    seen_infosets: set[str] = set()
    for s in game.infosets:
        if s.id in seen_infosets:
            add("DUPLICATE_NODE", s.id, "information set declared twice")
        seen_infosets.add(s.id)
        if not (1 <= s.player <= game.players):
            add("BAD_PLAYER", s.id, f"player {s.player} outside 1..{game.players}")
        if not s.moves:
            add("EMPTY_MOVES", s.id, "information set has no moves")
        if len(set(s.moves)) != len(s.moves):
            add("DUPLICATE_MOVE", s.id, "repeated move label")
        if not game._members.get(s.id):
            add("EMPTY_INFOSET", s.id, "no member nodes")

    for node, h in game.node_infosets:
        if h not in seen_infosets:
            add("UNKNOWN_INFOSET", node, f"references undeclared information set {h!r}")

    declared = decision_ids | terminal_ids
    for e in game.edges:
        if e.parent not in declared:
            add("UNDECLARED_NODE", e.parent, "edge parent not declared")
        elif e.parent in terminal_ids:
            add("CHILD_OF_TERMINAL", e.parent, f"terminal has outgoing move {e.move!r}")
        if e.child not in declared:
            add("UNDECLARED_NODE", e.child, "edge child not declared")
    for e in game._duplicate_edges:
        add("DUPLICATE_EDGE", e.parent, f"two edges for move {e.move!r}")
    for child in sorted(game._parents):
        if len(game._parents[child]) > 1:
            add("MULTIPLE_PARENTS", child, "node has more than one parent")

    roots = tuple(sorted(n for n in declared if n not in game._parents))
    if not roots:
        add("NO_ROOT", "", "no node without a parent")
    elif len(roots) > 1:
        add("MULTIPLE_ROOTS", ",".join(roots), "more than one parentless node")

    # Reachability from the root, cycle-safe.
    if len(roots) == 1:
        reached = {roots[0]}
        queue = deque(roots)
        while queue:
            n = queue.popleft()
            for child in game.children(n).values():
                if child in declared and child not in reached:
                    reached.add(child)
                    queue.append(child)
        for n in sorted(declared - reached):
            add("UNREACHABLE_NODE", n, "not reachable from the root")

    # One child per move of the owning information set, no extras.
    for node in sorted(decision_ids):
        h = game._infoset_of[node]
        if h not in game._infoset_by_id:
            continue
        moves = set(game._infoset_by_id[h].moves)
        present = set(game.children(node))
        for m in sorted(moves - present):
            add("MISSING_CHILD", node, f"no child for move {m!r}")
        for m in sorted(present - moves):
            add("EXTRA_CHILD", node, f"edge for move {m!r} not in move list")

    for z in sorted(terminal_ids):
        vec = game._payoff_of.get(z)
        if vec is None:
            add("MISSING_PAYOFF", z, "terminal has no payoff vector")
        elif len(vec) != game.players:
            add("BAD_PAYOFF_LENGTH", z, f"{len(vec)} entries for {game.players} players")
    for z in sorted(game._payoff_of.keys() - terminal_ids):
        add("ORPHAN_PAYOFF", z, "payoff declared for a non-terminal id")

    flag = all(all(v == vec[0] for v in vec) for vec in game._payoff_of.values())
    if game.identical_interest != flag:
        add(
            "WRONG_IDENTICAL_INTEREST",
            "",
            f"flag is {game.identical_interest}, payoffs say {flag}",
        )

    structure_ok = not any(v.code in _STRUCTURAL for v in out)
    if structure_ok and roots:
        _check_recall(game, roots[0], add)

    return ValidationReport(tuple(out))


def _check_recall(game: GameTree, root: str, add) -> None:
    """Path-based checks: root singleton, no revisits, equal player experiences."""
    root_h = game._infoset_of.get(root)
    if root_h is not None and len(game._members.get(root_h, ())) != 1:
        add("ROOT_INFOSET_NOT_SINGLETON", root_h, "root information set must be a singleton")

    # experience[node] = per-player tuple of (infoset, move) pairs above node
    experience: dict[str, tuple[tuple[tuple[str, str], ...], ...]] = {
        root: tuple(() for _ in range(game.players))
    }
    path_sets: dict[str, frozenset[str]] = {root: frozenset()}
    revisited: set[str] = set()
    stack = [root]
    while stack:
        n = stack.pop()
        h = game._infoset_of.get(n)
        if h is not None and h in path_sets[n]:
            revisited.add(h)
            continue
        seen = path_sets[n] | ({h} if h is not None else frozenset())
        for move, child in game.children(n).items():
            exp = experience[n]
            if h is not None:
                player = game._infoset_by_id[h].player
                exp = tuple(
                    e + ((h, move),) if i + 1 == player else e
                    for i, e in enumerate(exp)
                )
            experience[child] = exp
            path_sets[child] = seen
            stack.append(child)
    for h in sorted(revisited):
        add("REVISITED_INFOSET", h, "a root path crosses this information set twice")
    for s in game.infosets:
        nodes = game._members.get(s.id, ())
        views = {experience[n][s.player - 1] for n in nodes if n in experience}
        if len(views) > 1:
            add(
                "IMPERFECT_RECALL",
                s.id,
                f"player {s.player} experiences differ across member nodes",
            )


# ----------------------------------------------------------------------
# Structural classification and game constants


def check_lemma1_class(game: GameTree) -> bool:
    """True iff every information set of size >= 2 has all immediate
    successors terminal, or all contained in one single information set."""
    for s in game.infosets:
        nodes = game.members(s.id)
        if len(nodes) < 2:
            continue
        successors = [c for n in nodes for c in game.children(n).values()]
        if all(game.is_terminal(c) for c in successors):
            continue
        if any(game.is_terminal(c) for c in successors):
            return False
        if len({game.infoset_of(c) for c in successors}) != 1:
            return False
    return True


@dataclass(frozen=True)
class GameMetrics:
    """Constants of an identical-interest game used by the repetition bounds.

    ``k_max`` is the least nonnegative integer K with
    ``1 - (1-rho)**(K+1) >= (1 - delta_min/(8*u_max))**(1/l_max)``;
    it is None (and ``distinct_payoffs`` False) when payoffs collide.
    """

    l_max: int
    u_max: float
    delta_min: float
    num_terminals: int
    k_max: Optional[int]
    distinct_payoffs: bool


def frequency_threshold(metrics: GameMetrics) -> float:
    """The lower bound (1 - delta_min/(8*u_max))**(1/l_max) on on-path frequencies."""
    if not metrics.distinct_payoffs:
        raise GameError(DEGENERATE_PAYOFFS, "payoffs collide; threshold undefined")
    return (1.0 - metrics.delta_min / (8.0 * metrics.u_max)) ** (1.0 / metrics.l_max)


def compute_metrics(game: GameTree, rho: float) -> GameMetrics:
    """Compute path/payoff constants for a valid identical-interest game."""
    if not (0.0 < rho < 1.0):
        raise GameError(BAD_PARAMETER, f"rho must be in (0,1), got {rho}")
    if not game.identical_interest:
        raise GameError(NOT_IDENTICAL_INTEREST, "metrics require a common payoff")

    root = game.root()
    depth = {root: 0}
    l_max = 1
    stack = [root]
    while stack:
        n = stack.pop()
        for child in game.children(n).values():
            depth[child] = depth[n] + 1
            if game.is_terminal(child):
                l_max = max(l_max, depth[child])
            else:
                stack.append(child)

    values = sorted(game.common_payoff(z) for z in game.terminals)
    u_max = max(abs(v) for v in values)
    if len(values) > 1:
        delta_min = min(b - a for a, b in zip(values, values[1:]))
    else:
        delta_min = 0.0

    k_max: Optional[int] = None
    distinct = delta_min > 0.0
    if distinct:
        threshold = (1.0 - delta_min / (8.0 * u_max)) ** (1.0 / l_max)
        k = 0
        while 1.0 - (1.0 - rho) ** (k + 1) < threshold:
            k += 1
            if k > 1_000_000:  # unreachable for valid inputs
                raise RuntimeError("no finite repetition bound found")
        k_max = k

    return GameMetrics(
        l_max=l_max,
        u_max=u_max,
        delta_min=delta_min,
        num_terminals=len(game.terminals),
        k_max=k_max,
        distinct_payoffs=distinct,
    )
