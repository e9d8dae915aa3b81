"""Command-line entry point: ``hicrl {run,report,replay,oracle}``.

Exit codes: 0 on success, 1 when any scenario failed with an error, 2 on
usage or configuration errors (always raised before any network call).
"""

from __future__ import annotations

import argparse
import configparser
import logging
import os
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Sequence

from .backend import API_KEY_ENV, BASE_URL_ENV, HttpBackend, ScriptedBackend
from .core import Tag, Trajectory
from .engine import MODES, RunConfig
from .envs import ENV_IDS, Scenario, bundled_scenarios, load_pack_file, make_env
from .envs.minishop import best_score, satisfies
from .errors import FixtureExhausted, HicrlError
from .harness import load_episodes, load_report, run_experiment
from .promptkit import PromptBundle, assemble_prompt, load_examples, render_trajectory

log = logging.getLogger("hicrl")

DEFAULT_MODEL = "gpt-3.5-turbo"
DEFAULT_BASE_URL = "https://api.openai.com/v1"
EXIT_OK, EXIT_SCENARIO_ERROR, EXIT_USAGE = 0, 1, 2

# run settings that may come from flags, the config file, or defaults
_RUN_DEFAULTS: dict[str, Any] = {
    "env": None,
    "mode": "hmr",
    "episodes": 5,
    "backend": "scripted",
    "fixture": None,
    "model": DEFAULT_MODEL,
    "base_url": None,
    "endpoint": "chat",
    "out": None,
    "workers": 1,
    "seed": None,
    "limit": None,
    "char_budget": None,
    "pack": None,
    "requests_per_minute": 60.0,
}
_INTS = {"episodes", "workers", "seed", "limit", "char_budget"}
_FLOATS = {"requests_per_minute"}


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class CliConfig:
    """Resolved settings for ``run`` (flags > config file > environment > defaults)."""

    env: str
    mode: str
    episodes: int
    backend: str
    fixture: str | None
    model: str
    base_url: str
    endpoint: str
    out: str | None
    workers: int
    seed: int | None
    limit: int | None
    char_budget: int | None
    pack: str | None
    requests_per_minute: float
    dry_run: bool = False

    def __post_init__(self) -> None:
        if self.env not in ENV_IDS:
            raise UsageError(f"--env must be one of {', '.join(ENV_IDS)}")
        if self.mode not in MODES:
            raise UsageError(f"--mode must be one of {', '.join(MODES)}")
        if self.backend not in ("http", "scripted"):
            raise UsageError("--backend must be http or scripted")
        if self.backend == "scripted" and not self.fixture and not self.dry_run:
            raise UsageError("--backend scripted needs --fixture")
        if self.backend == "http" and self.fixture:
            raise UsageError("--fixture only applies to --backend scripted")
        if self.episodes < 1 or self.workers < 1:
            raise UsageError("--episodes and --workers must be >= 1")
        if self.limit is not None and self.limit < 1:
            raise UsageError("--limit must be >= 1")
        if self.out is None and not self.dry_run:
            raise UsageError("run needs --out")

    def run_config(self) -> RunConfig:
        overrides: dict[str, Any] = {"mode": self.mode, "episodes": self.episodes}
        if self.char_budget is not None:
            overrides["char_budget"] = self.char_budget
        return RunConfig.for_env(self.env, **overrides)


def read_config_file(path: str | Path) -> dict[str, str]:
    """Plain ``key = value`` lines; ``#`` comments; keys match the long flag names."""
    parser = configparser.ConfigParser(interpolation=None)
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc}") from exc
    try:
        parser.read_string("[run]\n" + text)
    except configparser.Error as exc:
        raise UsageError(f"bad config file {path}: {exc}") from exc
    values = {k.replace("-", "_"): v for k, v in parser["run"].items()}
    unknown = sorted(set(values) - set(_RUN_DEFAULTS))
    if unknown:
        raise UsageError(f"unknown config keys in {path}: {', '.join(unknown)}")
    return values


def resolve_run_config(args: argparse.Namespace, environ: dict[str, str] | None = None) -> CliConfig:
    environ = os.environ if environ is None else environ
    file_values = read_config_file(args.config) if args.config else {}
    env_values = {"base_url": environ.get(BASE_URL_ENV)}
    resolved: dict[str, Any] = {}
    for key, default in _RUN_DEFAULTS.items():
        for source in (getattr(args, key, None), file_values.get(key), env_values.get(key)):
            if source is not None and source != "":
                resolved[key] = source
                break
        else:
            resolved[key] = default
        if resolved[key] is not None:
            try:
                if key in _INTS:
                    resolved[key] = int(resolved[key])
                elif key in _FLOATS:
                    resolved[key] = float(resolved[key])
            except ValueError:
                raise UsageError(f"{key} must be a number, got {resolved[key]!r}") from None
    resolved["base_url"] = resolved["base_url"] or DEFAULT_BASE_URL
    return CliConfig(**resolved, dry_run=args.dry_run)


def select_scenarios(cfg: CliConfig) -> list[Scenario]:
    scenarios = load_pack_file(cfg.pack) if cfg.pack else bundled_scenarios(cfg.env)
    scenarios = [s for s in scenarios if s.env_id == cfg.env]
    if cfg.seed is not None:
        scenarios = [s for s in scenarios if s.seed == cfg.seed]
        if not scenarios:
            raise UsageError(f"no {cfg.env} scenario with seed {cfg.seed}")
    if cfg.limit is not None:
        scenarios = scenarios[: cfg.limit]
    return scenarios


def first_prompt(scenario: Scenario, config: RunConfig) -> str:
    tagged = config.mode != "notag"
    env = make_env(scenario.env_id)
    bundle = PromptBundle(
        examples=load_examples(scenario.env_id, scenario.task_type if scenario.env_id == "minihouse" else None),
        reflections=(),
        task=env.reset(scenario),
        trajectory=Trajectory(),
        cue=Tag.GOAL if tagged else None,
        tagged=tagged,
    )
    return assemble_prompt(bundle, config.char_budget)


# -- subcommands ---------------------------------------------------------------

def cmd_run(args: argparse.Namespace) -> int:
    cfg = resolve_run_config(args)
    config = cfg.run_config()
    scenarios = select_scenarios(cfg)
    if cfg.dry_run:
        if scenarios:
            print(first_prompt(scenarios[0], config))
        return EXIT_OK
    if cfg.backend == "http":
        if not os.environ.get(API_KEY_ENV):
            raise UsageError(f"--backend http needs the {API_KEY_ENV} environment variable")
        backend = HttpBackend(cfg.model, cfg.base_url, endpoint=cfg.endpoint,
                              requests_per_minute=cfg.requests_per_minute)
    else:
        if not Path(cfg.fixture).is_file():
            raise UsageError(f"fixture not found: {cfg.fixture}")
        backend = ScriptedBackend.from_jsonl(cfg.fixture)
    try:
        report = run_experiment(scenarios, config, backend, out_dir=cfg.out, workers=cfg.workers)
    except FixtureExhausted as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SCENARIO_ERROR
    print(report.render_text(), end="")
    if report.exhausted_scenarios:
        print(f"exhausted (prompt outgrew the budget): {', '.join(report.exhausted_scenarios)}")
    if report.failed_scenarios:
        print(f"aborted: {', '.join(report.failed_scenarios)}", file=sys.stderr)
        return EXIT_SCENARIO_ERROR
    return EXIT_OK


def cmd_report(args: argparse.Namespace) -> int:
    try:
        report = load_report(args.run_dir)
    except FileNotFoundError:
        print(f"error: no report in {args.run_dir}", file=sys.stderr)
        return EXIT_SCENARIO_ERROR
    if args.format == "json":
        print(report.to_json(), end="")
    else:
        print(report.render_text(), end="")
    return EXIT_OK


def cmd_replay(args: argparse.Namespace) -> int:
    episodes = load_episodes(args.run_dir)
    if args.scenario:
        episodes = [e for e in episodes if e.scenario_id == args.scenario]
    if args.episode is not None:
        episodes = [e for e in episodes if e.episode_index == args.episode]
    if not episodes:
        print("error: no matching episodes", file=sys.stderr)
        return EXIT_SCENARIO_ERROR
    blocks = []
    for ep in episodes:
        head = f"=== {ep.scenario_id} episode {ep.episode_index}: {ep.outcome} (reward {ep.reward:g})"
        goals = "\n".join(f"  goal {g.id}: {g.text} [{g.status}]" for g in ep.trajectory.goals)
        body = render_trajectory(ep.trajectory, tagged=not args.untagged)
        tail = f"\n  error: {ep.error}" if ep.error else ""
        blocks.append("\n".join(x for x in (head, goals, body) if x) + tail)
    print("\n\n".join(blocks))
    return EXIT_OK


def check_oracles(env_ids: Sequence[str]) -> list[str]:
    """Play every bundled oracle; return a description of each failure."""
    problems = []
    for env_id in env_ids:
        cap = RunConfig.for_env(env_id).max_env_steps
        for sc in bundled_scenarios(env_id):
            actions = sc.oracle_actions
            if len(actions) > cap:
                problems.append(f"{sc.scenario_id}: oracle needs {len(actions)} steps, cap is {cap}")
                continue
            env = make_env(env_id)
            env.reset(sc)
            result = None
            for action in actions:
                result = env.step(action)
                if result.done:
                    break
            if result is None or not result.won:
                problems.append(f"{sc.scenario_id}: oracle does not reach success")
            if env_id == "minishop":
                catalog = sc.world["catalog"]
                if best_score(catalog, sc.gold) < 1.0:
                    problems.append(f"{sc.scenario_id}: gold not satisfiable by any catalog item")
                elif sum(satisfies(it, sc.gold) for it in catalog) != 1:
                    problems.append(f"{sc.scenario_id}: gold satisfied by more than one item")
    return problems


def cmd_oracle(args: argparse.Namespace) -> int:
    env_ids = list(ENV_IDS) if args.env in (None, "all") else [args.env]
    problems = check_oracles(env_ids)
    for env_id in env_ids:
        print(f"{env_id}: {len(bundled_scenarios(env_id))} scenarios checked")
    for p in problems:
        print(f"FAIL {p}")
    if args.emit_fixture:
        from .backend import write_fixture
        from .fixtures import build_fixture

        solve_at = None if args.solve_at == 0 else args.solve_at
        responses = {}
        for env_id in env_ids:
            # failing episodes must last exactly as long as that env's step cap
            config = RunConfig.for_env(env_id, mode=args.mode, episodes=args.episodes)
            responses.update(build_fixture(bundled_scenarios(env_id), config, solve_at))
        write_fixture(args.emit_fixture, responses)
        n = sum(len(v) for v in responses.values())
        print(f"wrote {n} scripted responses to {args.emit_fixture}")
    print("all oracles solve their scenarios" if not problems else f"{len(problems)} problem(s)")
    return EXIT_OK if not problems else EXIT_SCENARIO_ERROR


# -- parser --------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # usage errors print help and exit 2
        self.print_help(sys.stderr)
        self.exit(EXIT_USAGE, f"\n{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="hicrl", description="Hierarchical in-context RL agents on small text environments.")
    ap.add_argument("--log-level", default="WARNING", choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="run a multi-episode experiment")
    run.add_argument("--env", choices=ENV_IDS)
    run.add_argument("--mode", choices=MODES)
    run.add_argument("--episodes", type=int)
    run.add_argument("--backend", choices=["http", "scripted"])
    run.add_argument("--fixture", help="JSONL responses for --backend scripted")
    run.add_argument("--model")
    run.add_argument("--base-url", dest="base_url")
    run.add_argument("--endpoint", choices=["chat", "completions"])
    run.add_argument("--requests-per-minute", dest="requests_per_minute", type=float)
    run.add_argument("--out", help="run directory (resumed if it already exists)")
    run.add_argument("--workers", type=int)
    run.add_argument("--seed", type=int, help="run only the scenario with this seed")
    run.add_argument("--limit", type=int, help="run only the first N scenarios")
    run.add_argument("--char-budget", dest="char_budget", type=int)
    run.add_argument("--pack", help="scenario pack JSON instead of the bundled one")
    run.add_argument("--config", help="key = value file; flags override it")
    run.add_argument("--dry-run", action="store_true", help="print the first prompt and exit")
    run.set_defaults(func=cmd_run)

    rep = sub.add_parser("report", help="print the report of a run directory")
    rep.add_argument("run_dir")
    rep.add_argument("--format", choices=["text", "json"], default="text")
    rep.set_defaults(func=cmd_report)

    rp = sub.add_parser("replay", help="print persisted episodes as tagged text")
    rp.add_argument("run_dir")
    rp.add_argument("--scenario")
    rp.add_argument("--episode", type=int)
    rp.add_argument("--untagged", action="store_true")
    rp.set_defaults(func=cmd_replay)

    orc = sub.add_parser("oracle", help="check that every bundled scenario is solvable")
    orc.add_argument("--env", choices=[*ENV_IDS, "all"], default="all")
    orc.add_argument("--emit-fixture", help="also write a scripted fixture built from the oracle plans")
    orc.add_argument("--mode", choices=MODES, default="hmr")
    orc.add_argument("--episodes", type=int, default=5)
    orc.add_argument("--solve-at", type=int, default=1, help="episode that succeeds (0: never)")
    orc.set_defaults(func=cmd_oracle)
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=args.log_level, stream=sys.stderr,
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"hicrl: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except HicrlError as exc:
        print(f"hicrl: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SCENARIO_ERROR


dispatch = main

if __name__ == "__main__":
    sys.exit(main())
