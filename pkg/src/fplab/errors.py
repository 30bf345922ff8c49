"""Shared error type. Every domain failure carries a machine-readable code."""

# Lookup failures
UNKNOWN_NODE = "UNKNOWN_NODE"
UNKNOWN_INFOSET = "UNKNOWN_INFOSET"
UNKNOWN_MOVE = "UNKNOWN_MOVE"
UNKNOWN_PLAYER = "UNKNOWN_PLAYER"
UNKNOWN_TERMINAL = "UNKNOWN_TERMINAL"

# Domain failures
NOT_IDENTICAL_INTEREST = "NOT_IDENTICAL_INTEREST"
DEGENERATE_PAYOFFS = "DEGENERATE_PAYOFFS"
BAD_PARAMETER = "BAD_PARAMETER"
TOO_LARGE = "TOO_LARGE"


class GameError(Exception):
    """Domain error with a stable code for programmatic handling."""

    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code

    def __repr__(self) -> str:
        return f"GameError({self.code!r}, {self.args[0]!r})"
