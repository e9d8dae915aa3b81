"""Acceptance criteria 1-9, one PASS/FAIL line each.

Run under pytest (lines appear in the terminal summary) or directly with
``python3 tests/test_acceptance.py``. Criterion 10 needs a live endpoint and
is skipped here.
"""

from __future__ import annotations

import json
import random
import sys
import tempfile
import time
from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

sys.path.insert(0, str(Path(__file__).parent))

from hicrl.backend import RecordingBackend, ScriptedBackend
from hicrl.cli import main as cli_main
from hicrl.core import Tag, grammar_violations
from hicrl.engine import RunConfig, run_episode
from hicrl.envs import ENV_IDS, bundled_scenarios, make_env
from hicrl.envs.minishop import best_score, satisfies
from hicrl.fixtures import build_fixture, solving_responses
from hicrl.harness import EPISODES, compute_metrics, run_experiment
from hicrl.hmr import run_hmr, segment_by_finish
from hicrl.promptkit import render_steps, trajectory_lines
from helpers import (
    InterruptingBackend,
    Interrupted,
    build_trajectory,
    constant_backend,
    cool_mug_scenario,
    failed_episode,
    failed_plans,
    linear_scan_segments,
    run_files,
    valid_trajectories,
)

# pinned thresholds
GRAMMAR_EPISODES = 1000
GRAMMAR_SECONDS = 60.0
PROPERTY_CASES = 500
MAX_FINISHED_GOALS = 8
RETRY_BUDGET = 4000
RETRY_EXHAUSTED_BY = 4
RESPONSES_PER_EPISODE = 400

_REPORTS: list = []  # every report produced here feeds criterion 9


def _record(number: int, ok: bool, detail: str) -> None:
    try:
        from conftest import ACCEPTANCE_LINES
    except ImportError:  # run as a script
        ACCEPTANCE_LINES = []
    ACCEPTANCE_LINES.append((number, ok, detail))
    print(f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}")


def _random_responses(scenario, rng: random.Random) -> list[str]:
    actions = scenario.oracle_actions + ["look around", "go to moon 1", "click[Next >]", "lookup[the]", "search[x]"]
    pool = (
        [lambda: rng.choice(actions)] * 6
        + [lambda: rng.choice(["Yes", "No", "yes.", "[Finish] No"])] * 4
        + [lambda: rng.choice(["find the thing", "[Goal] check the room", "I should look first."])] * 2
        + [lambda: rng.choice(["", "   ", "Perhaps", "[Think]"])]
    )
    return [rng.choice(pool)() for _ in range(RESPONSES_PER_EPISODE)]


def check_grammar() -> tuple[bool, str]:
    rng = random.Random(20240611)
    scenarios = [sc for env in ENV_IDS for sc in bundled_scenarios(env)]
    start = time.perf_counter()
    violations, outcomes = 0, {}
    for i in range(GRAMMAR_EPISODES):
        sc = scenarios[i % len(scenarios)]
        config = RunConfig.for_env(sc.env_id, mode="hmr")
        backend = ScriptedBackend({(sc.scenario_id, 1): _random_responses(sc, rng)})
        ep = run_episode(sc, make_env(sc.env_id), backend, config=config)
        violations += bool(grammar_violations(ep.trajectory.steps) or grammar_violations(ep.trajectory.steps, strict=True))
        outcomes[ep.outcome] = outcomes.get(ep.outcome, 0) + 1
    elapsed = time.perf_counter() - start
    ok = violations == 0 and elapsed < GRAMMAR_SECONDS
    return ok, f"{GRAMMAR_EPISODES} random episodes, {violations} violations, {elapsed:.1f}s (< {GRAMMAR_SECONDS:.0f}s), outcomes {outcomes}"


def check_count_law() -> tuple[bool, str]:
    seen: set[int] = set()

    @settings(max_examples=PROPERTY_CASES, deadline=None, database=None)
    @given(failed_plans(max_finished=MAX_FINISHED_GOALS))
    def law(plan):
        ep = failed_episode(build_trajectory(plan))
        n = sum(s.is_finish_yes for s in ep.trajectory.steps)
        seen.add(n)
        out = run_hmr(ep, constant_backend(), task="t")
        assert len(out) == n + 1
        assert sum(r.level == "high" for r in out) == 1

    try:
        law()
    except Exception as exc:  # noqa: BLE001 - reported as FAIL
        return False, f"counterexample: {exc}"
    return True, f"{PROPERTY_CASES} failed trajectories, n+1 entries with one high-level for n in {sorted(seen)}"


def check_partition() -> tuple[bool, str]:
    @settings(max_examples=PROPERTY_CASES, deadline=None, database=None)
    @given(valid_trajectories(max_goals=MAX_FINISHED_GOALS))
    def partition(traj):
        segs = segment_by_finish(traj)
        assert tuple(s for seg in segs for s in seg.steps) == traj.steps
        assert [(seg.steps[0].index, seg.steps[-1].index + 1) for seg in segs] == linear_scan_segments(traj.steps)
        for seg in segs[:-1]:
            assert seg.steps[-1].is_finish_yes
        for seg in segs:
            assert not any(s.is_finish_yes for s in seg.steps[:-1])

    try:
        partition()
    except Exception as exc:  # noqa: BLE001
        return False, f"counterexample: {exc}"
    return True, f"{PROPERTY_CASES} grammar-valid trajectories match the linear-scan oracle"


def check_finish_locality() -> tuple[bool, str]:
    sc = cool_mug_scenario()
    rec = RecordingBackend(ScriptedBackend({(sc.scenario_id, 1): solving_responses(sc)}))
    ep = run_episode(sc, make_env("minihouse"), rec, config=RunConfig.for_env("minihouse"))
    steps = ep.trajectory.steps
    finish_requests = rec.requests_for("finish")
    finish_steps = [s for s in steps if s.tag is Tag.FINISH]
    problems = []
    if sum(s.is_finish_yes for s in steps) != 3 or ep.outcome != "success":
        problems.append("golden episode is not a 3-sub-goal success")
    if len(finish_requests) != len(finish_steps):
        problems.append("finish request count differs from Finish steps")
    for request, fstep in zip(finish_requests, finish_steps):
        before = steps[: fstep.index]
        last_yes = max((s.index for s in before if s.is_finish_yes), default=-1)
        section = trajectory_lines(request.prompt)
        if section != render_steps(before[last_yes + 1:]):
            problems.append(f"finish at step {fstep.index} sees more than its segment")
        for old in before[: last_yes + 1]:
            if old.tag is Tag.GOAL and old.content in request.prompt.split("\n\nTask: ")[-1]:
                problems.append(f"finish at step {fstep.index} mentions earlier goal {old.content!r}")
    detail = f"{len(finish_requests)} Finish requests over 3 sub-goals"
    return not problems, detail + ("; " + "; ".join(problems) if problems else ", none sees a step before the last Finish=Yes")


def _solve_plan(scenarios):
    # a mix: solved at episode 1, later, or never
    return {sc.scenario_id: [1, 2, 4, None][i % 4] for i, sc in enumerate(scenarios)}


def check_mode_identity() -> tuple[bool, str]:
    mismatches, compared = [], 0
    with tempfile.TemporaryDirectory() as tmp:
        for env in ENV_IDS:
            scenarios = bundled_scenarios(env)
            first: dict[str, list[str]] = {}
            for mode in ("hmr", "reflexion", "retry"):
                config = RunConfig.for_env(env, mode=mode)
                backend = ScriptedBackend(build_fixture(scenarios, config, _solve_plan(scenarios)))
                out = Path(tmp) / f"{env}-{mode}"
                _REPORTS.append(run_experiment(scenarios, config, backend, out_dir=out))
                lines = (out / EPISODES).read_text(encoding="utf-8").splitlines(keepends=True)
                first[mode] = [l for l in lines if json.loads(l).get("episode") == 1]
            compared += len(first["hmr"])
            if not first["hmr"] == first["reflexion"] == first["retry"]:
                mismatches.append(env)
    ok = not mismatches and compared > 0
    return ok, f"episode-1 JSONL ({compared} lines over 64 scenarios) identical across hmr/reflexion/retry" + (
        f"; differs for {mismatches}" if mismatches else "")


def check_solvability() -> tuple[bool, str]:
    import contextlib
    import io

    with contextlib.redirect_stdout(io.StringIO()):
        code = cli_main(["oracle"])
    shop = bundled_scenarios("minishop")
    scans = [(best_score(sc.world["catalog"], sc.gold), sum(satisfies(it, sc.gold) for it in sc.world["catalog"]))
             for sc in shop]
    shop_ok = all(best == 1.0 and n == 1 for best, n in scans)
    return code == 0 and shop_ok, (f"`oracle` exit code {code}; {sum(len(bundled_scenarios(e)) for e in ENV_IDS)} "
                                   f"scenarios; exhaustive scan: {sum(b == 1.0 for b, _ in scans)}/{len(shop)} shop goals "
                                   f"reach score 1.0, each by exactly one item: {shop_ok}")


def check_retry_exhaustion() -> tuple[bool, str]:
    episodes_to_exhaust = {}
    ok = True
    for env in ENV_IDS:
        scenarios = bundled_scenarios(env)
        config = RunConfig.for_env(env, mode="retry", char_budget=RETRY_BUDGET)
        backend = ScriptedBackend(build_fixture(scenarios, config, None))
        report = run_experiment(scenarios, config, backend)
        _REPORTS.append(report)
        statuses = {r.status for r in report.per_scenario}
        worst = max(len(r.episodes) for r in report.per_scenario)
        episodes_to_exhaust[env] = (statuses, worst)
        if env == "minihouse":
            ok = statuses == {"exhausted"} and worst <= RETRY_EXHAUSTED_BY and all(
                "BudgetError" in (r.error or "") for r in report.per_scenario)
    house = episodes_to_exhaust["minihouse"]
    others = ", ".join(f"{e}: {sorted(s)} by episode {w}" for e, (s, w) in episodes_to_exhaust.items() if e != "minihouse")
    return ok, (f"minihouse (24 scenarios, {RETRY_BUDGET}-char budget): {sorted(house[0])} by episode {house[1]} "
                f"(<= {RETRY_EXHAUSTED_BY}); for reference {others}")


def check_resume() -> tuple[bool, str]:
    scenarios = bundled_scenarios("minihouse")[:4] + bundled_scenarios("minishop")[:3] + bundled_scenarios("miniwiki")[:3]
    config = RunConfig(mode="hmr")
    backend = ScriptedBackend(build_fixture(scenarios, config, _solve_plan(scenarios)))
    bad = []
    kill_points = [1, 90, 333, 700, 1111]
    with tempfile.TemporaryDirectory() as tmp:
        ref = Path(tmp) / "ref"
        _REPORTS.append(run_experiment(scenarios, config, backend, out_dir=ref))
        reference = run_files(ref)
        for after in kill_points:
            out = Path(tmp) / f"kill-{after}"
            try:
                run_experiment(scenarios, config, InterruptingBackend(backend, after), out_dir=out)
                bad.append(f"{after}: run was not interrupted")
                continue
            except Interrupted:
                pass
            with open(out / EPISODES, "a", encoding="utf-8") as fh:
                fh.write('{"kind": "step", "scen')  # torn write from the kill
            run_experiment(scenarios, config, backend, out_dir=out)
            if run_files(out) != reference:
                bad.append(str(after))
    return not bad, (f"killed after {kill_points} backend calls, resumed: transcript, reflections and report "
                     f"byte-identical to the uninterrupted run" if not bad else f"differs at kill points {bad}")


def check_monotone() -> tuple[bool, str]:
    @settings(max_examples=PROPERTY_CASES, deadline=None, database=None)
    @given(st.lists(st.tuples(st.integers(0, 9), st.integers(1, 5), st.booleans()), max_size=60))
    def monotone(raw):
        recs = [{"scenario": f"s{s}", "episode": k, "outcome": "success" if ok else "failure"} for s, k, ok in raw]
        rates = compute_metrics(recs)[0]
        values = [rates[k] for k in range(1, 6)]
        assert values == sorted(values)

    try:
        monotone()
    except Exception as exc:  # noqa: BLE001
        return False, f"counterexample: {exc}"
    reports_ok = all(
        [r.success_at[k] for k in range(1, r.n_episodes + 1)] == sorted(r.success_at[k] for k in range(1, r.n_episodes + 1))
        for r in _REPORTS
    )
    return reports_ok, f"{PROPERTY_CASES} random record sets and {len(_REPORTS)} generated run reports non-decreasing in k"


CHECKS = [
    (1, check_grammar), (2, check_count_law), (3, check_partition), (4, check_finish_locality),
    (5, check_mode_identity), (6, check_solvability), (7, check_retry_exhaustion), (8, check_resume),
    (9, check_monotone),
]


@pytest.mark.parametrize("number, check", CHECKS, ids=[f"criterion_{n}" for n, _ in CHECKS])
def test_criterion(number, check):
    ok, detail = check()
    _record(number, ok, detail)
    assert ok, detail


@pytest.mark.skip(reason="criterion 10 needs a live OpenAI-compatible endpoint and HICRL_API_KEY")
def test_criterion_10_live():
    pass


if __name__ == "__main__":
    import logging

    logging.basicConfig(level=logging.ERROR)
    results = []
    for number, check in CHECKS:
        ok, detail = check()
        _record(number, ok, detail)
        results.append(ok)
    print("SKIP criterion 10: live endpoint run, not part of the offline suite")
    sys.exit(0 if all(results) else 1)
