"""Command-line entry point.

Subcommands: validate, info, equilibria, run, diagnose.  Exit codes:
0 success, 1 I/O or parse failure, 2 semantic failure, 3 bad configuration.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

from . import diagnostics as diag
from . import engine, gamefile, oracle, strategy, tree
from .errors import GameError

EXIT_OK = 0
EXIT_IO = 1
EXIT_SEMANTIC = 2
EXIT_CONFIG = 3


@dataclass
class RunConfig:
    game: str
    mode: str
    rounds: int
    seed: int
    reps: int
    rho: Optional[float] = None
    alpha: Optional[float] = None
    alpha_overrides: dict[str, float] = field(default_factory=dict)
    tie_break: str = engine.LEXICOGRAPHIC
    init: str = "uniform"
    gap_every: int = 0
    stability_window: int = 500
    events: bool = False
    out: str = "out"
    figures: bool = True


def derive_seed(master: int, rep: int) -> int:
    """Stateless seed mix so replications are order-independent."""
    digest = hashlib.blake2b(
        f"{master}:{rep}".encode(), digest_size=8
    ).digest()
    return int.from_bytes(digest, "big")


def _fail(message: str, code: int) -> int:
    print(message, file=sys.stderr)
    return code


def _load_game(path: str):
    """Returns (game, exit_code); game is None when exit_code != 0."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        return None, _fail(f"{path}: {exc}", EXIT_IO)
    result = gamefile.parse(text)
    if not result.ok:
        for d in result.diagnostics:
            print(f"{path}:{d.line}:{d.col}: {d.code}: {d.message}", file=sys.stderr)
        return None, EXIT_IO
    game = gamefile.to_game(result.spec)
    report = tree.validate(game)
    if not report.ok:
        for v in report.violations:
            print(f"{path}: {v.code}: {v.subject}: {v.message}", file=sys.stderr)
        return None, EXIT_SEMANTIC
    return game, EXIT_OK


def cmd_validate(args) -> int:
    game, code = _load_game(args.game)
    if code == EXIT_OK:
        print(f"{args.game}: ok")
    return code


def cmd_info(args) -> int:
    game, code = _load_game(args.game)
    if game is None:
        return code
    lemma1 = tree.check_lemma1_class(game)
    payload = {
        "identical_interest": game.identical_interest,
        "lemma1_class": lemma1,
        "num_infosets": len(game.infosets),
        "players": game.players,
    }
    if game.identical_interest:
        metrics = tree.compute_metrics(game, args.rho)
        payload.update(
            l_max=metrics.l_max,
            u_max=metrics.u_max,
            delta_min=metrics.delta_min,
            num_terminals=metrics.num_terminals,
            distinct_payoffs=metrics.distinct_payoffs,
            k_max=metrics.k_max,
            rho=args.rho,
        )
    else:
        payload["num_terminals"] = len(game.terminals)
    if args.json:
        print(json.dumps(payload, sort_keys=True, indent=2))
    else:
        for key in sorted(payload):
            value = payload[key]
            if key == "k_max" and value is None:
                value = "n/a"
            print(f"{key}: {value}")
    return EXIT_OK


def cmd_equilibria(args) -> int:
    game, code = _load_game(args.game)
    if game is None:
        return code
    count = oracle.profile_count(game)
    if count > args.max_profiles:
        return _fail(
            f"TOO_LARGE: {count} pure profiles exceeds bound {args.max_profiles}",
            EXIT_SEMANTIC,
        )
    found = []
    for profile in oracle.enumerate_pure_profiles(game):
        f = strategy.BehaviorProfile.pure(game, profile)
        if strategy.is_equilibrium(game, f, args.eps).ok:
            z = oracle._walk(game, profile)
            found.append((profile, z, game.payoff(z)))
    if args.json:
        print(
            json.dumps(
                [
                    {"profile": p, "terminal": z, "payoffs": list(vec)}
                    for p, z, vec in found
                ],
                sort_keys=True,
                indent=2,
            )
        )
    else:
        for profile, z, vec in found:
            moves = " ".join(f"{h}={profile[h]}" for h in sorted(profile))
            pay = " ".join(gamefile.format_number(v) for v in vec)
            print(f"{moves} -> {z} payoffs {pay}")
        print(f"{len(found)} pure equilibria of {count} profiles")
    return EXIT_OK


def _build_run_config(args) -> RunConfig:
    overrides = {}
    for item in args.alpha_at or []:
        if "=" not in item:
            raise GameError("BAD_PARAMETER", f"alpha-at: expected H=VALUE, got {item!r}")
        h, _, v = item.partition("=")
        try:
            overrides[h] = float(v)
        except ValueError:
            raise GameError("BAD_PARAMETER", f"alpha-at: bad value in {item!r}") from None
    return RunConfig(
        game=args.game,
        mode=args.mode,
        rounds=args.rounds,
        seed=args.seed,
        reps=args.reps,
        rho=args.rho,
        alpha=args.alpha,
        alpha_overrides=overrides,
        tie_break=args.tie_break,
        init=args.init,
        gap_every=args.gap_every,
        stability_window=args.stability_window,
        events=args.events,
        out=args.out,
        figures=not args.no_figures,
    )


def _check_run_config(cfg: RunConfig) -> None:
    if cfg.rounds < 1:
        raise GameError("BAD_PARAMETER", "rounds: must be >= 1")
    if cfg.reps < 1:
        raise GameError("BAD_PARAMETER", "reps: must be >= 1")
    if cfg.gap_every < 0:
        raise GameError("BAD_PARAMETER", "gap-every: must be >= 0")
    if cfg.mode == engine.CLASSIC:
        if cfg.rho is not None:
            raise GameError("BAD_PARAMETER", "rho: rho is ifm-only")
        if cfg.alpha is not None or cfg.alpha_overrides:
            raise GameError("BAD_PARAMETER", "alpha: alpha is ifm-only")
        if cfg.events:
            raise GameError("BAD_PARAMETER", "events: annotation is ifm-only")
    else:
        if cfg.rho is None:
            raise GameError("BAD_PARAMETER", "rho: required in ifm mode")
        if cfg.alpha is None and not cfg.alpha_overrides:
            raise GameError("BAD_PARAMETER", "alpha: required in ifm mode")


def _load_profile(game, path: str) -> strategy.BehaviorProfile:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    profile = strategy.BehaviorProfile(
        {h: {a: float(p) for a, p in dist.items()} for h, dist in data.items()}
    )
    strategy.check_profile(game, profile)
    return profile


def _quantiles(values: list[float]) -> dict[str, float]:
    if not values:
        return {}
    ordered = sorted(values)

    def q(p: float) -> float:
        if len(ordered) == 1:
            return ordered[0]
        pos = p * (len(ordered) - 1)
        lo = math.floor(pos)
        hi = math.ceil(pos)
        frac = pos - lo
        return ordered[lo] * (1 - frac) + ordered[hi] * frac

    return {"p10": q(0.1), "p50": q(0.5), "p90": q(0.9)}


def cmd_run(args) -> int:
    try:
        cfg = _build_run_config(args)
        _check_run_config(cfg)
    except GameError as exc:
        return _fail(f"config error: {exc}", EXIT_CONFIG)

    game, code = _load_game(cfg.game)
    if game is None:
        return code

    try:
        f1 = (
            "uniform"
            if cfg.init == "uniform"
            else _load_profile(game, cfg.init)
        )
    except OSError as exc:
        return _fail(f"{cfg.init}: {exc}", EXIT_IO)
    except (json.JSONDecodeError, GameError) as exc:
        return _fail(f"config error: init: {exc}", EXIT_CONFIG)

    alpha_arg = None
    if cfg.mode == engine.IFM:
        base = cfg.alpha if cfg.alpha is not None else 0.5
        alpha_arg = {s.id: cfg.alpha_overrides.get(s.id, base) for s in game.infosets}

    out_dir = Path(cfg.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    per_rep = []
    gap_series = []
    absorption_rounds = []
    terminal_counts: dict[str, int] = {}
    metrics = None
    if cfg.events:
        metrics = tree.compute_metrics(game, cfg.rho if cfg.rho is not None else 0.5)

    for rep in range(1, cfg.reps + 1):
        seed = derive_seed(cfg.seed, rep)
        try:
            state = engine.init_state(
                game,
                cfg.mode,
                f1=f1,
                rho=cfg.rho,
                alpha=alpha_arg,
                tie_break=cfg.tie_break,
                seed=seed,
            )
        except GameError as exc:
            return _fail(f"config error: {exc}", EXIT_CONFIG)
        result = engine.run(
            game,
            state,
            cfg.rounds,
            record_gaps=cfg.gap_every > 0,
            gap_every=max(1, cfg.gap_every),
            collect_snapshots=cfg.events,
        )
        if cfg.events:
            diag.detect_events(
                game, result.records, result.snapshots, cfg.rho, metrics
            )
        series = diag.convergence_metrics(game, result.records)
        stability = series.path_stability
        absorbed = stability >= min(cfg.stability_window, cfg.rounds)
        absorption_round = cfg.rounds - stability + 1 if absorbed else None
        final_terminal = result.records[-1].terminal
        final_gap = engine.max_gap(game, result.state)
        per_rep.append(
            {
                "rep": rep,
                "seed": seed,
                "absorbed": absorbed,
                "absorption_round": absorption_round,
                "path_stability": stability,
                "final_terminal": final_terminal,
                "final_max_gap": final_gap,
            }
        )
        gap_series.append(list(series.samples))
        absorption_rounds.append(absorption_round)
        terminal_counts[final_terminal] = terminal_counts.get(final_terminal, 0) + 1
        _write_trace(out_dir / f"trace_{rep:04d}.csv", result.records)

    summary = {
        "config": asdict(cfg),
        "per_rep": per_rep,
        "aggregate": {
            "absorbed_fraction": sum(1 for r in per_rep if r["absorbed"]) / len(per_rep),
            "absorption_round_quantiles": _quantiles(
                [float(r) for r in absorption_rounds if r is not None]
            ),
            "final_max_gap_quantiles": _quantiles(
                [r["final_max_gap"] for r in per_rep]
            ),
            "terminal_distribution": dict(sorted(terminal_counts.items())),
        },
    }
    (out_dir / "summary.json").write_text(
        json.dumps(summary, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )

    if cfg.figures:
        from . import report

        written = report.render_run_figures(
            out_dir, gap_series, absorption_rounds, terminal_counts, cfg.rounds
        )
        for path in written:
            print(f"wrote {path}")
    print(f"wrote {out_dir / 'summary.json'}")
    return EXIT_OK


def _write_trace(path: Path, records) -> None:
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["round", "terminal", "path", "max_gap", "event_flags"])
        for rec in records:
            gap = rec.max_gap()
            writer.writerow(
                [
                    rec.round,
                    rec.terminal,
                    "/".join(f"{h}={a}" for h, a in rec.path),
                    "" if gap is None else repr(gap),
                    "|".join(rec.events) if rec.events else "",
                ]
            )


def cmd_diagnose(args) -> int:
    game, code = _load_game(args.game)
    if game is None:
        return code
    try:
        metrics = tree.compute_metrics(game, args.rho)
    except GameError as exc:
        return _fail(str(exc), EXIT_SEMANTIC)
    try:
        profile = _load_profile(game, args.profile)
    except OSError as exc:
        return _fail(f"{args.profile}: {exc}", EXIT_IO)
    except (json.JSONDecodeError, GameError) as exc:
        return _fail(f"config error: profile: {exc}", EXIT_CONFIG)

    payload: dict = {
        "rho": args.rho,
        "k_max": metrics.k_max,
        "distinct_payoffs": metrics.distinct_payoffs,
    }
    try:
        payload["p_min"] = diag.p_min(game, args.rho, args.alpha, metrics)
    except GameError as exc:
        return _fail(str(exc), EXIT_SEMANTIC)
    if args.terminal is not None:
        if args.terminal not in set(game.terminals):
            return _fail(f"UNKNOWN_TERMINAL: {args.terminal}", EXIT_SEMANTIC)
        payload["terminal"] = args.terminal
        payload["k_t"] = diag.k_t(game, profile, args.terminal, args.rho, metrics)
        report = diag.lock_level(
            game, profile, args.terminal, args.rho, l_cap=args.l_cap
        )
        payload["lock_level"] = report.display
        payload["limit_locked"] = report.limit_locked
        m_val = diag.m_t(game, profile, args.terminal, args.rho, metrics, cap=args.m_cap)
        payload["m_t"] = f">= {args.m_cap}" if math.isinf(m_val) else int(m_val)
    if args.json:
        print(json.dumps(payload, sort_keys=True, indent=2))
    else:
        for key in sorted(payload):
            print(f"{key}: {payload[key]}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fplab",
        description="Fictitious play laboratory for extensive-form games",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="parse and validate a game file")
    p.add_argument("game")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("info", help="print game constants and class membership")
    p.add_argument("game")
    p.add_argument("--rho", type=float, default=0.5)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_info)

    p = sub.add_parser("equilibria", help="enumerate pure equilibria")
    p.add_argument("game")
    p.add_argument("--pure", action="store_true", default=True,
                   help="pure profiles only (the default and only mode)")
    p.add_argument("--eps", type=float, default=1e-9)
    p.add_argument("--max-profiles", type=int, default=oracle.DEFAULT_PROFILE_BOUND)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_equilibria)

    p = sub.add_parser("run", help="run seeded replications and emit traces")
    p.add_argument("game")
    p.add_argument("--mode", choices=[engine.CLASSIC, engine.IFM], required=True)
    p.add_argument("--rounds", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--reps", type=int, default=1)
    p.add_argument("--rho", type=float, default=None)
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--alpha-at", action="append", metavar="H=VALUE",
                   help="per-infoset inertia override (repeatable)")
    p.add_argument("--tie-break", choices=[engine.LEXICOGRAPHIC, engine.UNIFORM_RANDOM],
                   default=engine.LEXICOGRAPHIC)
    p.add_argument("--init", default="uniform",
                   help="'uniform' or a JSON profile file")
    p.add_argument("--gap-every", type=int, default=0)
    p.add_argument("--stability-window", type=int, default=500)
    p.add_argument("--events", action="store_true",
                   help="annotate traces with repeat/lock/deviate events")
    p.add_argument("--out", default="out")
    p.add_argument("--no-figures", action="store_true")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("diagnose", help="locking diagnostics for a profile snapshot")
    p.add_argument("game")
    p.add_argument("--profile", required=True, help="JSON profile file")
    p.add_argument("--terminal", default=None)
    p.add_argument("--rho", type=float, default=0.5)
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--l-cap", type=int, default=1000)
    p.add_argument("--m-cap", type=int, default=1000)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_diagnose)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except GameError as exc:
        return _fail(f"{exc.code}: {exc}", EXIT_SEMANTIC)


if __name__ == "__main__":
    sys.exit(main())
