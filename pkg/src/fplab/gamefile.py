"""Line-oriented textual game description format.

Grammar, one declaration per line, '#' starts a comment, ids are
[A-Za-z0-9_]+:

    players <int>
    infoset <id> player <int> moves <id>+
    node <id> infoset <id>
    edge <parent-node-id> <move-id> <child-id>
    terminal <id> payoffs <real>+     # a single real broadcasts to all players

The root is the unique node that never appears as a child.  Parsing is total:
it never aborts mid-file and collects every diagnostic with a 1-based line
and column.  Semantic checks live in tree.validate; this module only rejects
what is not well formed syntactically.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional

from .tree import GameTree

E_SYNTAX = "E_SYNTAX"
E_DUPLICATE_ID = "E_DUPLICATE_ID"
E_BAD_NUMBER = "E_BAD_NUMBER"
E_UNKNOWN_SECTION = "E_UNKNOWN_SECTION"

_ID = re.compile(r"[A-Za-z0-9_]+\Z")
_TOKEN = re.compile(r"\S+")


@dataclass(frozen=True)
class Diagnostic:
    line: int
    col: int
    code: str
    message: str


@dataclass
class GameSpec:
    """Parsed, pre-validation form of a game description."""

    players: Optional[int] = None
    infosets: list[tuple[str, int, tuple[str, ...]]] = field(default_factory=list)
    nodes: list[tuple[str, str]] = field(default_factory=list)
    edges: list[tuple[str, str, str]] = field(default_factory=list)
    terminals: list[tuple[str, tuple[float, ...]]] = field(default_factory=list)


@dataclass
class ParseResult:
    spec: Optional[GameSpec]
    diagnostics: list[Diagnostic]

    @property
    def ok(self) -> bool:
        return not self.diagnostics


def parse(text: str) -> ParseResult:
    spec = GameSpec()
    diags: list[Diagnostic] = []
    node_ids: set[str] = set()
    infoset_ids: set[str] = set()
    players_line: Optional[int] = None

    def diag(line: int, col: int, code: str, message: str) -> None:
        diags.append(Diagnostic(line, col, code, message))

    def want_id(line: int, tok: tuple[str, int]) -> Optional[str]:
        text_, col = tok
        if not _ID.match(text_):
            diag(line, col, E_SYNTAX, f"invalid identifier {text_!r}")
            return None
        return text_

    for lineno, raw in enumerate(text.splitlines(), 1):
        body = raw.split("#", 1)[0]
        toks = [(m.group(), m.start() + 1) for m in _TOKEN.finditer(body)]
        if not toks:
            continue
        head, col0 = toks[0]
        rest = toks[1:]

        if head == "players":
            if players_line is not None:
                diag(lineno, col0, E_DUPLICATE_ID, "players declared twice")
                continue
            if len(rest) != 1:
                diag(lineno, col0, E_SYNTAX, "expected: players <int>")
                continue
            val, col = rest[0]
            try:
                spec.players = int(val)
            except ValueError:
                diag(lineno, col, E_BAD_NUMBER, f"not an integer: {val!r}")
                continue
            players_line = lineno

        elif head == "infoset":
            if (
                len(rest) < 5
                or rest[1][0] != "player"
                or rest[3][0] != "moves"
            ):
                diag(
                    lineno,
                    col0,
                    E_SYNTAX,
                    "expected: infoset <id> player <int> moves <id>+",
                )
                continue
            hid = want_id(lineno, rest[0])
            if hid is None:
                continue
            try:
                player = int(rest[2][0])
            except ValueError:
                diag(lineno, rest[2][1], E_BAD_NUMBER, f"not an integer: {rest[2][0]!r}")
                continue
            moves = []
            bad = False
            seen_moves: set[str] = set()
            for tok in rest[4:]:
                m = want_id(lineno, tok)
                if m is None:
                    bad = True
                    break
                if m in seen_moves:
                    diag(lineno, tok[1], E_DUPLICATE_ID, f"repeated move {m!r}")
                    bad = True
                    break
                seen_moves.add(m)
                moves.append(m)
            if bad:
                continue
            if hid in infoset_ids:
                diag(lineno, rest[0][1], E_DUPLICATE_ID, f"infoset {hid!r} declared twice")
                continue
            infoset_ids.add(hid)
            spec.infosets.append((hid, player, tuple(moves)))

        elif head == "node":
            if len(rest) != 3 or rest[1][0] != "infoset":
                diag(lineno, col0, E_SYNTAX, "expected: node <id> infoset <id>")
                continue
            nid = want_id(lineno, rest[0])
            hid = want_id(lineno, rest[2])
            if nid is None or hid is None:
                continue
            if nid in node_ids:
                diag(lineno, rest[0][1], E_DUPLICATE_ID, f"node {nid!r} declared twice")
                continue
            node_ids.add(nid)
            spec.nodes.append((nid, hid))

        elif head == "edge":
            if len(rest) != 3:
                diag(lineno, col0, E_SYNTAX, "expected: edge <parent> <move> <child>")
                continue
            parts = [want_id(lineno, t) for t in rest]
            if any(p is None for p in parts):
                continue
            spec.edges.append((parts[0], parts[1], parts[2]))

        elif head == "terminal":
            if len(rest) < 3 or rest[1][0] != "payoffs":
                diag(lineno, col0, E_SYNTAX, "expected: terminal <id> payoffs <real>+")
                continue
            tid = want_id(lineno, rest[0])
            if tid is None:
                continue
            values = []
            bad = False
            for tok in rest[2:]:
                try:
                    values.append(float(tok[0]))
                except ValueError:
                    diag(lineno, tok[1], E_BAD_NUMBER, f"not a number: {tok[0]!r}")
                    bad = True
                    break
            if bad:
                continue
            if tid in node_ids:
                diag(lineno, rest[0][1], E_DUPLICATE_ID, f"node {tid!r} declared twice")
                continue
            node_ids.add(tid)
            spec.terminals.append((tid, tuple(values)))

        else:
            diag(lineno, col0, E_UNKNOWN_SECTION, f"unknown declaration {head!r}")

    if players_line is None:
        diag(1, 1, E_SYNTAX, "missing players declaration")

    diags.sort(key=lambda d: (d.line, d.col))
    return ParseResult(spec=spec if not diags else None, diagnostics=diags)


def to_game(spec: GameSpec) -> GameTree:
    """Assemble a GameTree from a clean parse (run tree.validate afterwards)."""
    return GameTree.build(
        players=spec.players,
        infosets={hid: (player, moves) for hid, player, moves in spec.infosets},
        nodes=dict(spec.nodes),
        edges=spec.edges,
        payoffs={tid: (vec[0] if len(vec) == 1 else vec) for tid, vec in spec.terminals},
    )


def format_number(v: float) -> str:
    """Shortest decimal that round-trips through float()."""
    if v == int(v) and abs(v) < 1e16:
        return str(int(v))
    return repr(v)


def serialize(game: GameTree) -> str:
    """Canonical text: fixed section order, entries sorted by id, single
    spaces, shortest round-trip payoffs; equal-component payoff vectors
    collapse to a single broadcast value.  parse(serialize(g)) rebuilds g."""
    lines = [f"players {game.players}"]
    for s in sorted(game.infosets, key=lambda s: s.id):
        lines.append(f"infoset {s.id} player {s.player} moves {' '.join(s.moves)}")
    for node, h in sorted(game.node_infosets):
        lines.append(f"node {node} infoset {h}")
    for e in sorted(game.edges, key=lambda e: (e.parent, e.move, e.child)):
        lines.append(f"edge {e.parent} {e.move} {e.child}")
    for z, vec in sorted(game.payoffs):
        if all(v == vec[0] for v in vec):
            rendered = format_number(vec[0])
        else:
            rendered = " ".join(format_number(v) for v in vec)
        lines.append(f"terminal {z} payoffs {rendered}")
    return "\n".join(lines) + "\n"
