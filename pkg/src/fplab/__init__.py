"""Fictitious-play laboratory for finite extensive-form games.

Library layout:

- ``tree``: the game model, validation, structural classification, constants
- ``strategy``: behavior profiles and exact strategic quantities
- ``engine``: classic and inertia/fading-memory fictitious play
- ``diagnostics``: repetition/locking machinery and trace analysis
- ``oracle``: brute-force ground truth for small games
- ``gamefile``: the textual game description format
- ``cli`` / ``report``: command-line harness and figure rendering
"""

from .errors import GameError
from .tree import (
    Edge,
    GameMetrics,
    GameTree,
    Infoset,
    ValidationReport,
    Violation,
    check_lemma1_class,
    compute_metrics,
    frequency_threshold,
    validate,
)
from .strategy import (
    BehaviorProfile,
    EquilibriumResult,
    best_replies,
    check_profile,
    expected_payoff,
    is_equilibrium,
    local_payoff,
    optimality_gap,
    reach_probability,
    reach_probability_infoset,
    replace_along_path,
)
from .engine import (
    LearnerState,
    RunResult,
    Snapshot,
    TraceRecord,
    init_state,
    max_gap,
    play_round,
    run,
)
from .diagnostics import (
    ConvergenceSeries,
    EventChain,
    EventReport,
    LockReport,
    RepeatEvent,
    apply_F,
    convergence_metrics,
    detect_events,
    k_t,
    lock_level,
    m_t,
    p_min,
    visit_gap_ratios,
)
from .oracle import (
    brute_force_pure_equilibria,
    enumerate_pure_profiles,
    global_optima,
    profile_count,
)
from .gamefile import Diagnostic, GameSpec, ParseResult, parse, serialize, to_game

__version__ = "0.1.0"

__all__ = [
    "GameError",
    "Edge",
    "GameMetrics",
    "GameTree",
    "Infoset",
    "ValidationReport",
    "Violation",
    "check_lemma1_class",
    "compute_metrics",
    "frequency_threshold",
    "validate",
    "BehaviorProfile",
    "EquilibriumResult",
    "best_replies",
    "check_profile",
    "expected_payoff",
    "is_equilibrium",
    "local_payoff",
    "optimality_gap",
    "reach_probability",
    "reach_probability_infoset",
    "replace_along_path",
    "LearnerState",
    "RunResult",
    "Snapshot",
    "TraceRecord",
    "init_state",
    "max_gap",
    "play_round",
    "run",
    "ConvergenceSeries",
    "EventChain",
    "EventReport",
    "LockReport",
    "RepeatEvent",
    "apply_F",
    "convergence_metrics",
    "detect_events",
    "k_t",
    "lock_level",
    "m_t",
    "p_min",
    "visit_gap_ratios",
    "brute_force_pure_equilibria",
    "enumerate_pure_profiles",
    "global_optima",
    "profile_count",
    "Diagnostic",
    "GameSpec",
    "ParseResult",
    "parse",
    "serialize",
    "to_game",
]
