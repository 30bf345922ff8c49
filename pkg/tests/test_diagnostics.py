"""Repetition/locking diagnostics and trace event detection."""

from __future__ import annotations

import math
import random

import pytest

from fplab import (
    BehaviorProfile,
    GameError,
    apply_F,
    compute_metrics,
    convergence_metrics,
    detect_events,
    frequency_threshold,
    init_state,
    is_equilibrium,
    k_t,
    lock_level,
    m_t,
    p_min,
    replace_along_path,
    run,
    visit_gap_ratios,
)
from fplab.strategy import index_for

from conftest import load_game, random_profile


NEAR_AA = BehaviorProfile(
    {"h1": {"A": 0.99, "B": 0.01}, "h2": {"a": 0.99, "b": 0.01}}
)


# ----------------------------------------------------------------------
# The iterated update map


def test_apply_F_two_steps(coord):
    f = BehaviorProfile.uniform(coord)
    g = apply_F(coord, f, "zAa", 2, 0.5)
    assert g.prob("h1", "A") == pytest.approx(0.875)
    assert g.prob("h1", "B") == pytest.approx(0.125)
    assert g.prob("h2", "a") == pytest.approx(0.875)


def test_apply_F_zero_is_identity(coord):
    f = BehaviorProfile.uniform(coord)
    assert apply_F(coord, f, "zAa", 0, 0.5) == f


def test_apply_F_off_path_unchanged(gate):
    f = BehaviorProfile.uniform(gate)
    g = apply_F(gate, f, "zA", 3, 0.4)
    assert g.probs["hW"] == f.probs["hW"]
    assert g.probs["hV"] == f.probs["hV"]
    assert g.prob("h1", "A") == pytest.approx(1 - 0.6**3 * 0.5)


def test_apply_F_recursion_identity(coord):
    rng = random.Random(3)
    for _ in range(20):
        f = random_profile(coord, rng)
        for m in range(1, 6):
            lhs = apply_F(coord, f, "zBb", m + 1, 0.3)
            rhs = apply_F(coord, apply_F(coord, f, "zBb", m, 0.3), "zBb", 1, 0.3)
            for h, dist in lhs.probs.items():
                for a, v in dist.items():
                    assert v == pytest.approx(rhs.prob(h, a), abs=1e-12)


def test_apply_F_semigroup(coord):
    rng = random.Random(9)
    for _ in range(20):
        f = random_profile(coord, rng)
        m, k = rng.randrange(1, 5), rng.randrange(1, 5)
        lhs = apply_F(coord, f, "zAa", m + k, 0.25)
        rhs = apply_F(coord, apply_F(coord, f, "zAa", k, 0.25), "zAa", m, 0.25)
        for h, dist in lhs.probs.items():
            for a, v in dist.items():
                assert v == pytest.approx(rhs.prob(h, a), abs=1e-12)


# ----------------------------------------------------------------------
# Repetition counts


def test_k_t_worst_case_equals_k_max(coord):
    m = compute_metrics(coord, 0.5)
    zero = BehaviorProfile(
        {"h1": {"A": 0.0, "B": 1.0}, "h2": {"a": 0.0, "b": 1.0}}
    )
    assert k_t(coord, zero, "zAa", 0.5, m) == m.k_max == 5


def test_k_t_zero_when_bound_met(coord):
    m = compute_metrics(coord, 0.5)
    pure = BehaviorProfile.pure(coord, {"h1": "A", "h2": "a"})
    assert k_t(coord, pure, "zAa", 0.5, m) == 0


@pytest.mark.parametrize("name", ["coord", "single", "gift", "gate", "twostage"])
def test_k_t_bounded_by_k_max(name):
    game = load_game(name)
    m = compute_metrics(game, 0.5)
    rng = random.Random(hash(name) & 0xFFFF)
    terminals = sorted(game.terminals)
    for _ in range(1000):
        f = random_profile(game, rng)
        z = terminals[rng.randrange(len(terminals))]
        assert 0 <= k_t(game, f, z, 0.5, m) <= m.k_max


def test_k_t_degenerate_payoffs(allsame):
    m = compute_metrics(allsame, 0.5)
    with pytest.raises(GameError) as err:
        k_t(allsame, BehaviorProfile.uniform(allsame), "zAa", 0.5, m)
    assert err.value.code == "DEGENERATE_PAYOFFS"


# ----------------------------------------------------------------------
# Locked states


def test_lock_level_near_vertex(coord):
    rep = lock_level(coord, NEAR_AA, "zAa", 0.5, l_cap=50)
    assert rep.at_cap and rep.level == 50
    assert rep.display == ">= 50"
    assert rep.limit_locked


def test_lock_level_zero_for_bad_terminal(coord):
    rep = lock_level(coord, BehaviorProfile.uniform(coord), "zAb", 0.5, l_cap=50)
    assert rep.level == 0 and not rep.at_cap
    assert not rep.limit_locked


def test_limit_locked_at_strict_pure_equilibrium(coord):
    f = replace_along_path(coord, BehaviorProfile.uniform(coord), "zAa")
    rep = lock_level(coord, f, "zAa", 0.5, l_cap=10)
    assert rep.limit_locked


def test_lock_level_monotone_in_cap(coord):
    rng = random.Random(17)
    for _ in range(50):
        f = random_profile(coord, rng)
        z = sorted(coord.terminals)[rng.randrange(4)]
        shallow = lock_level(coord, f, z, 0.5, l_cap=5)
        deep = lock_level(coord, f, z, 0.5, l_cap=50)
        if shallow.at_cap:
            assert deep.level >= shallow.level
        else:
            assert deep.level == shallow.level and not deep.at_cap


def test_m_t_capped_near_vertex(coord):
    m = compute_metrics(coord, 0.5)
    assert math.isinf(m_t(coord, NEAR_AA, "zAa", 0.5, m, cap=1000))


def test_m_t_finite_when_pull_breaks_best_reply(coord):
    m = compute_metrics(coord, 0.5)
    f = BehaviorProfile({"h1": {"A": 0.01, "B": 0.99}, "h2": {"a": 0.99, "b": 0.01}})
    val = m_t(coord, f, "zBa", 0.5, m, cap=1000)
    assert math.isfinite(val)


def test_m_t_ignores_zero_probability_subtree(gate):
    # the subtree behind a zero-probability move never enters any best-reply
    # evaluation, so perturbing beliefs there cannot change the count
    m = compute_metrics(gate, 0.5)
    base = {
        "h1": {"A": 0.8, "B": 0.2},
        "hW": {"c": 1.0, "d": 0.0},
        "hV": {"e": 0.3, "f": 0.7},
    }
    perturbed = {**base, "hV": {"e": 0.9, "f": 0.1}}
    for z in ("zA", "zBc"):
        a = m_t(gate, BehaviorProfile(base), z, 0.5, m, cap=50)
        b = m_t(gate, BehaviorProfile(perturbed), z, 0.5, m, cap=50)
        assert a == b
        ra = lock_level(gate, BehaviorProfile(base), z, 0.5, l_cap=50)
        rb = lock_level(gate, BehaviorProfile(perturbed), z, 0.5, l_cap=50)
        assert (ra.level, ra.at_cap, ra.limit_locked) == (
            rb.level,
            rb.at_cap,
            rb.limit_locked,
        )


def test_p_min_values(coord, single):
    m = compute_metrics(coord, 0.5)
    assert p_min(coord, 0.5, 0.5, m) == pytest.approx(2.0**-208, rel=1e-12)
    m1 = compute_metrics(single, 0.5)
    assert p_min(single, 0.5, 0.5, m1) == pytest.approx(2.0**-16, rel=1e-12)


def test_p_min_decreases_with_repetition_bound(coord):
    # a larger repetition bound means a longer forced-inertia window
    m_small = compute_metrics(coord, 0.5)   # bound 5
    m_large = compute_metrics(coord, 0.05)  # slower fading, larger bound
    assert m_large.k_max > m_small.k_max
    assert p_min(coord, 0.05, 0.5, m_large) < p_min(coord, 0.5, 0.5, m_small)


def test_p_min_per_infoset_alpha(coord):
    m = compute_metrics(coord, 0.5)
    uniform = p_min(coord, 0.5, 0.5, m)
    mapped = p_min(coord, 0.5, {"h1": 0.5, "h2": 0.5}, m)
    assert uniform == mapped


# ----------------------------------------------------------------------
# Event detection


def synthetic_repeat_trace(game, f, z, rho, rounds):
    """Records and snapshots of ``z`` repeated, consistent with the update."""
    from fplab.engine import Snapshot, TraceRecord

    idx = index_for(game)
    records, snapshots = [], []
    current = f
    moves = dict(idx.path_pairs_ids[z])
    last = tuple(
        idx.move_num[j][moves[h]] if h in moves else 0
        for j, h in enumerate(idx.infoset_ids)
    )
    for t in range(1, rounds + 1):
        freq = tuple(tuple(row) for row in idx.arrays(current))
        snapshots.append(Snapshot(freq=freq, last_moves=last))
        records.append(TraceRecord(round=t, terminal=z, path=idx.path_pairs_ids[z]))
        current = apply_F(game, current, z, 1, rho)
    return records, snapshots


def test_repeat_event_marked_on_synthetic_trace(coord):
    m = compute_metrics(coord, 0.5)
    f = BehaviorProfile.uniform(coord)
    assert k_t(coord, f, "zAa", 0.5, m) == 4
    records, snapshots = synthetic_repeat_trace(coord, f, "zAa", 0.5, 12)
    report = detect_events(coord, records, snapshots, 0.5, m, lock_cap=200)
    assert "E" in (records[0].events or ())
    first = report.events[0]
    assert first.round == 1 and first.k == 4 and first.repeat


def test_no_repeat_event_when_terminal_changes(coord):
    from fplab.engine import Snapshot, TraceRecord

    m = compute_metrics(coord, 0.5)
    idx = index_for(coord)
    f = BehaviorProfile.uniform(coord)
    freq = tuple(tuple(row) for row in idx.arrays(f))
    records, snapshots = [], []
    cycle = ["zAa", "zBb", "zAb", "zBa"] * 3
    for t, z in enumerate(cycle, 1):
        snapshots.append(Snapshot(freq=freq, last_moves=(0, 0)))
        records.append(TraceRecord(round=t, terminal=z, path=idx.path_pairs_ids[z]))
    report = detect_events(coord, records, snapshots, 0.5, m, lock_cap=50)
    assert not any(e.repeat for e in report.events)
    assert all(not (r.events or ()) for r in records)


def test_absorbed_run_final_segment_locked(coord):
    m = compute_metrics(coord, 0.3)
    st = init_state(coord, "ifm", rho=0.3, alpha=0.5, seed=1)
    res = run(coord, st, 400, collect_snapshots=True)
    report = detect_events(coord, res.records, res.snapshots, 0.3, m)
    locked = [e for e in report.events if e.m is not None and math.isinf(e.m)]
    assert locked, "absorbed suffix should report a capped repetition count"
    suffix_z = res.records[-1].terminal
    assert all(e.terminal == suffix_z for e in locked)


def test_repeat_event_pushes_frequencies_past_threshold(coord):
    m = compute_metrics(coord, 0.3)
    thr = frequency_threshold(m)
    st = init_state(coord, "ifm", rho=0.3, alpha=0.5, seed=2)
    res = run(coord, st, 600, collect_snapshots=True)
    report = detect_events(coord, res.records, res.snapshots, 0.3, m)
    checked = 0
    for ev in report.events:
        if not ev.repeat:
            continue
        i = ev.round - res.records[0].round
        after = i + ev.k + 1
        if after >= len(res.snapshots):
            continue
        freq = res.snapshots[after].freq
        idx = index_for(coord)
        for j, k in idx.path_pairs[ev.terminal]:
            assert freq[j][k] >= thr - 1e-12
            checked += 1
    assert checked > 0


ENGINEERED_F1 = BehaviorProfile(
    {"h1": {"A": 0.03, "B": 0.97}, "h2": {"a": 0.97, "b": 0.03}}
)


@pytest.mark.parametrize("seed,expect_pair", [(7, ("zBa", "zAa")), (9, ("zBa", "zBb"))])
def test_single_deviation_chain_detected(coord, seed, expect_pair):
    # a short lock on a poor terminal, one strictly improving deviation,
    # then absorption: a maximal one-link cascade
    m = compute_metrics(coord, 0.3)
    st = init_state(coord, "ifm", f1=ENGINEERED_F1, a1={"h1": "B", "h2": "a"},
                    rho=0.3, alpha=0.5, seed=seed)
    res = run(coord, st, 60, collect_snapshots=True)
    report = detect_events(coord, res.records, res.snapshots, 0.3, m)
    assert len(report.chains) == 1
    chain = report.chains[0]
    assert chain.maximal
    assert chain.terminals == expect_pair
    u = coord.common_payoff
    assert u(chain.terminals[1]) > u(chain.terminals[0])
    anchor = res.records[chain.rounds[0] - 1]
    assert "Ehat" in anchor.events and "M" in anchor.events


def test_chain_improvement_and_length_bound(coord):
    m = compute_metrics(coord, 0.3)
    bound = (m.num_terminals - 1) * m.num_terminals
    chains = []
    for seed in range(30):
        st = init_state(coord, "ifm", f1=ENGINEERED_F1,
                        a1={"h1": "B", "h2": "a"}, rho=0.3, alpha=0.5, seed=seed)
        res = run(coord, st, 80, collect_snapshots=True)
        chains.extend(
            detect_events(coord, res.records, res.snapshots, 0.3, m).chains
        )
    assert chains
    for chain in chains:
        assert len(chain.rounds) - 1 < bound
        seen = []
        for prev, new in zip(chain.terminals, chain.terminals[1:]):
            seen.append(prev)
            if new in seen:
                assert coord.common_payoff(new) > coord.common_payoff(prev)


# ----------------------------------------------------------------------
# Convergence metrics


def test_convergence_metrics_path_stability(coord):
    st = init_state(coord, "ifm", rho=0.3, alpha=0.5, seed=0)
    res = run(coord, st, 2000, record_gaps=True, gap_every=100)
    series = convergence_metrics(coord, res.records, sample_every=2)
    assert series.path_stability >= 1500
    assert all(t % 100 == 0 for t, _ in series.samples)


def test_convergence_metrics_single_round(coord):
    st = init_state(coord, "classic", seed=0)
    res = run(coord, st, 1)
    series = convergence_metrics(coord, res.records)
    assert series.path_stability == 1


def test_classic_gap_trend(coord):
    st = init_state(coord, "classic", seed=0)
    res = run(coord, st, 10_000, record_gaps=True, gap_every=100)
    series = convergence_metrics(coord, res.records)
    by_round = dict(series.samples)
    assert by_round[10_000] <= by_round[100] + 1e-9


def test_visit_gap_ratios(gift):
    # the root is visited every round, so consecutive-visit gaps are 1/t
    st = init_state(gift, "classic", seed=0)
    res = run(gift, st, 50)
    ratios = visit_gap_ratios(res.records, "h1")
    assert ratios == pytest.approx([1 / t for t in range(1, 50)])


def test_limit_profile_of_absorbed_run_is_equilibrium(coord):
    st = init_state(coord, "ifm", rho=0.3, alpha=0.5, seed=12)
    res = run(coord, st, 2000)
    z = res.records[-1].terminal
    limit = replace_along_path(coord, st.frequencies, z)
    assert is_equilibrium(coord, limit, 1e-9).ok
