"""Multi-episode experiment runner with persistence, resume and metrics.

Each scenario gets up to ``config.episodes`` attempts and its own memory.
A scenario that succeeds stops and counts as solved for every later
episode. Between failed attempts the mode's learning rule fills memory:

- ``hmr`` / ``notag``: one low-level reflection per finished sub-goal plus one
  high-level reflection (``notag`` renders everything without tags)
- ``reflexion``: a single whole-trajectory reflection
- ``retry``: the failed trajectory itself, verbatim

A run directory holds ``manifest.json``, ``episodes.jsonl``,
``reflections.jsonl`` and ``report.json``. Only a single writer thread touches
it. For every finished episode it appends the reflections first and then the
episode block, so an interrupted run can always be resumed from the last
complete episode.
"""

from __future__ import annotations

import json
import logging
import queue
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Iterable, Mapping, Sequence

from .core import (
    Episode,
    LongTermMemory,
    Reflection,
    dumps_jsonl,
    episode_from_records,
    episode_records,
    record_reflections,
)
from .engine import RunConfig, run_episode
from .envs import Scenario, make_env
from .errors import BackendError, BudgetError, CorruptManifest, EpisodeAborted, ParseError
from .hmr import reflect_full, run_hmr, trajectory_entry
from .promptkit import load_examples, load_reflection_exemplars

log = logging.getLogger(__name__)

MANIFEST = "manifest.json"
EPISODES = "episodes.jsonl"
REFLECTIONS = "reflections.jsonl"
REPORT = "report.json"
MANIFEST_FORMAT = 1

STATUS_SUCCESS = "success"
STATUS_FAILED = "failed"
STATUS_EXHAUSTED = "exhausted"
STATUS_ABORTED = "aborted"


# -- metrics -------------------------------------------------------------------

def first_successes(records: Iterable[Mapping[str, Any]]) -> dict[str, int | None]:
    """Earliest successful episode per scenario (None when it never succeeded)."""
    out: dict[str, int | None] = {}
    for rec in records:
        sid = rec["scenario"]
        out.setdefault(sid, None)
        if rec["outcome"] == "success":
            k = int(rec["episode"])
            out[sid] = k if out[sid] is None else min(out[sid], k)
    return out


def _rates(firsts: Mapping[str, int | None], n_episodes: int) -> dict[int, float]:
    total = len(firsts)
    return {
        k: (sum(1 for f in firsts.values() if f is not None and f <= k) / total if total else 0.0)
        for k in range(1, n_episodes + 1)
    }


def compute_metrics(
    records: Iterable[Mapping[str, Any]],
    n_episodes: int = 5,
    scenario_ids: Sequence[str] | None = None,
    task_types: Mapping[str, str] | None = None,
) -> tuple[dict[int, float], dict[str, dict[int, float]]]:
    """``success_at[k]`` = share of scenarios whose first success came at or before episode k.

    ``records`` are episode trailers (``scenario``, ``episode``, ``outcome`` and
    optionally ``task_type``). Scenarios listed in ``scenario_ids`` without any
    record count as never solved.
    """
    records = list(records)
    firsts = first_successes(records)
    for sid in scenario_ids or ():
        firsts.setdefault(sid, None)
    types = dict(task_types or {})
    for rec in records:
        if rec.get("task_type"):
            types.setdefault(rec["scenario"], rec["task_type"])
    by_type: dict[str, dict[str, int | None]] = {}
    for sid, first in firsts.items():
        by_type.setdefault(types.get(sid, "unknown"), {})[sid] = first
    return _rates(firsts, n_episodes), {t: _rates(f, n_episodes) for t, f in sorted(by_type.items())}


# -- report --------------------------------------------------------------------

def episode_summary(ep: Episode) -> dict[str, Any]:
    return {
        "episode": ep.episode_index,
        "outcome": ep.outcome,
        "reward": ep.reward,
        "n_steps": len(ep.trajectory.steps),
        "n_actions": ep.trajectory.n_actions,
        "n_goals": len(ep.trajectory.goals),
        "error": ep.error,
        "usage": {"prompt": ep.prompt_tokens, "completion": ep.completion_tokens},
    }


@dataclass(frozen=True)
class ScenarioResult:
    scenario_id: str
    task_type: str
    first_success: int | None
    status: str
    episodes: tuple[dict[str, Any], ...] = ()
    error: str | None = None

    def to_dict(self) -> dict[str, Any]:
        return {
            "scenario_id": self.scenario_id,
            "task_type": self.task_type,
            "first_success": self.first_success,
            "status": self.status,
            "episodes": list(self.episodes),
            "error": self.error,
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> ScenarioResult:
        return cls(d["scenario_id"], d["task_type"], d["first_success"], d["status"],
                   tuple(d.get("episodes", ())), d.get("error"))


@dataclass(frozen=True)
class RunReport:
    mode: str
    config_digest: str
    n_episodes: int
    per_scenario: tuple[ScenarioResult, ...]
    success_at: dict[int, float]
    per_task_type: dict[str, dict[int, float]]
    usage: dict[str, int] = field(default_factory=dict)

    @property
    def failed_scenarios(self) -> list[str]:
        """Scenarios cut short by an error (exhaustion in retry mode is an expected outcome)."""
        return [r.scenario_id for r in self.per_scenario if r.status == STATUS_ABORTED]

    @property
    def exhausted_scenarios(self) -> list[str]:
        return [r.scenario_id for r in self.per_scenario if r.status == STATUS_EXHAUSTED]

    def to_dict(self) -> dict[str, Any]:
        return {
            "mode": self.mode,
            "config_digest": self.config_digest,
            "episodes": self.n_episodes,
            "success_at": {str(k): v for k, v in self.success_at.items()},
            "per_task_type": {t: {str(k): v for k, v in m.items()} for t, m in self.per_task_type.items()},
            "per_scenario": [r.to_dict() for r in self.per_scenario],
            "usage": dict(self.usage),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> RunReport:
        def keyed(m: Mapping[str, float]) -> dict[int, float]:
            return {int(k): float(v) for k, v in sorted(m.items(), key=lambda kv: int(kv[0]))}

        return cls(
            mode=d["mode"],
            config_digest=d["config_digest"],
            n_episodes=int(d["episodes"]),
            per_scenario=tuple(ScenarioResult.from_dict(r) for r in d["per_scenario"]),
            success_at=keyed(d["success_at"]),
            per_task_type={t: keyed(m) for t, m in d["per_task_type"].items()},
            usage=dict(d.get("usage", {})),
        )

    def render_text(self) -> str:
        ks = list(self.success_at)
        head = f"{'':<14}" + "".join(f"{'ep' + str(k):>8}" for k in ks)

        def row(label: str, rates: Mapping[int, float]) -> str:
            return f"{label:<14}" + "".join(f"{100 * rates.get(k, 0.0):>7.1f}%" for k in ks)

        lines = [
            f"mode: {self.mode}   scenarios: {len(self.per_scenario)}   config: {self.config_digest}",
            "",
            "success rate (sticky)",
            head,
            row("all", self.success_at),
        ]
        lines += [row(t, m) for t, m in self.per_task_type.items()]
        lines += ["", f"{'scenario':<16}{'task':<12}{'status':<11}{'solved at':>9}"]
        for r in self.per_scenario:
            solved = "-" if r.first_success is None else str(r.first_success)
            lines.append(f"{r.scenario_id:<16}{r.task_type:<12}{r.status:<11}{solved:>9}")
            if r.error:
                lines.append(f"{'':<16}error: {r.error}")
        if self.usage:
            lines += ["", f"tokens: prompt {self.usage.get('prompt', 0)}, completion {self.usage.get('completion', 0)}"]
        return "\n".join(lines) + "\n"


# -- run directory -------------------------------------------------------------

@dataclass
class ResumeState:
    """What a run directory already holds, reduced to complete episodes."""

    episodes: dict[str, list[Episode]] = field(default_factory=dict)
    reflections: dict[tuple[str, int], list[Reflection]] = field(default_factory=dict)
    status: dict[str, tuple[str, str | None]] = field(default_factory=dict)

    def memory_for(self, scenario_id: str, budget: int) -> LongTermMemory:
        memory = LongTermMemory(budget=budget)
        for ep in self.episodes.get(scenario_id, ()):
            memory = record_reflections(memory, self.reflections.get((scenario_id, ep.episode_index), ()))
        return memory


def _complete_lines(path: Path) -> list[str]:
    """Newline-terminated lines of a file; a torn final line is discarded."""
    if not path.exists():
        return []
    lines = path.read_text(encoding="utf-8").splitlines(keepends=True)
    if lines and not lines[-1].endswith("\n"):
        log.warning("discarding a torn final line in %s", path.name)
        lines.pop()
    return lines


def _loads(line: str, path: Path, n: int) -> dict[str, Any]:
    try:
        return json.loads(line)
    except json.JSONDecodeError as exc:
        raise CorruptManifest(f"{path.name} line {n} is not valid JSON: {exc}") from exc


class RunDirectory:
    def __init__(self, path: str | Path):
        self.path = Path(path)

    def file(self, name: str) -> Path:
        return self.path / name

    def open(self, manifest: dict[str, Any]) -> ResumeState:
        """Create the directory, or validate it against ``manifest`` and load it for resume."""
        self.path.mkdir(parents=True, exist_ok=True)
        mpath = self.file(MANIFEST)
        if not mpath.exists():
            if self.file(EPISODES).exists() or self.file(REFLECTIONS).exists():
                raise CorruptManifest(f"{self.path} holds run data but no {MANIFEST}")
            mpath.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
            return ResumeState()
        try:
            existing = json.loads(mpath.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise CorruptManifest(f"unreadable {mpath}: {exc}") from exc
        for key in ("format", "config_digest", "scenarios"):
            if existing.get(key) != manifest.get(key):
                raise CorruptManifest(
                    f"{mpath} was written for a different run ({key}: {existing.get(key)!r} != {manifest.get(key)!r})"
                )
        return self.load()

    def load(self, trim: bool = True) -> ResumeState:
        """Read back complete episodes and their reflections, dropping anything partial.

        With ``trim`` the files are rewritten in place when something was
        dropped, so later appends continue from a clean state.
        """
        state = ResumeState()
        epath, rpath = self.file(EPISODES), self.file(REFLECTIONS)
        lines = _complete_lines(epath)
        kept: list[str] = []
        pending: list[tuple[str, dict[str, Any]]] = []
        for n, line in enumerate(lines, 1):
            rec = _loads(line, epath, n)
            kind = rec.get("kind")
            if kind == "status":
                if rec["status"] == STATUS_ABORTED:
                    continue  # transient; the scenario is retried
                state.status[rec["scenario"]] = (rec["status"], rec.get("error"))
                kept.append(line)
                continue
            pending.append((line, rec))
            if kind == "episode":
                ep = episode_from_records([r for _, r in pending])
                state.episodes.setdefault(ep.scenario_id, []).append(ep)
                kept.extend(l for l, _ in pending)
                pending = []
        if pending:
            log.warning("discarding %d records of an unfinished episode", len(pending))
        done = {(sid, ep.episode_index) for sid, eps in state.episodes.items() for ep in eps}
        rlines = _complete_lines(rpath)
        rkept = []
        for n, line in enumerate(rlines, 1):
            r = Reflection.from_dict(_loads(line, rpath, n))
            key = (r.source_scenario, r.source_episode)
            if key in done:
                state.reflections.setdefault(key, []).append(r)
                rkept.append(line)
        for path, after in ((epath, kept), (rpath, rkept)):
            if trim and path.exists() and "".join(after) != path.read_text(encoding="utf-8"):
                path.write_text("".join(after), encoding="utf-8")
        for sid in state.episodes:
            state.episodes[sid].sort(key=lambda e: e.episode_index)
        return state


class _Writer:
    """Single thread that owns the run directory; workers hand it finished batches."""

    def __init__(self, run_dir: RunDirectory | None):
        self.run_dir = run_dir
        self.queue: queue.Queue = queue.Queue()
        self.error: BaseException | None = None
        self.thread = threading.Thread(target=self._loop, name="hicrl-writer", daemon=True)
        self.thread.start()

    def submit(self, reflections: Sequence[Reflection] = (), episode: Episode | None = None,
               status: dict[str, Any] | None = None) -> None:
        if self.error is not None:
            raise self.error
        self.queue.put((tuple(reflections), episode, status))

    def _loop(self) -> None:
        while True:
            item = self.queue.get()
            if item is None:
                return
            if self.run_dir is None or self.error is not None:
                continue
            reflections, episode, status = item
            try:
                if reflections:
                    with open(self.run_dir.file(REFLECTIONS), "a", encoding="utf-8") as fh:
                        fh.write(dumps_jsonl(r.to_dict() for r in reflections))
                records = episode_records(episode) if episode is not None else []
                if status is not None:
                    records.append({"kind": "status", **status})
                if records:
                    with open(self.run_dir.file(EPISODES), "a", encoding="utf-8") as fh:
                        fh.write(dumps_jsonl(records))
            except BaseException as exc:  # surfaced to the caller on close()
                self.error = exc

    def close(self) -> None:
        self.queue.put(None)
        self.thread.join()
        if self.error is not None:
            raise self.error


# -- experiment ----------------------------------------------------------------

def learn(
    episode: Episode,
    completer,
    config: RunConfig,
    *,
    task: str,
    exemplars: Sequence = (),
) -> list[Reflection]:
    """Apply the mode's learning rule to a failed episode."""
    if config.mode == "retry":
        return [trajectory_entry(episode)]
    if config.mode == "reflexion":
        return [reflect_full(episode, completer, task=task, exemplars=exemplars, cap=config.reflection_cap)]
    return run_hmr(
        episode, completer, task=task, exemplars=exemplars, cap=config.reflection_cap,
        include_tail=config.include_tail, tagged=config.mode != "notag",
    )


def manifest_for(scenarios: Sequence[Scenario], config: RunConfig) -> dict[str, Any]:
    return {
        "format": MANIFEST_FORMAT,
        "config": config.to_dict(),
        "config_digest": config.digest(),
        "scenarios": [sc.scenario_id for sc in scenarios],
    }


def _examples_for(sc: Scenario):
    return load_examples(sc.env_id, sc.task_type if sc.env_id == "minihouse" else None)


def run_scenario(
    sc: Scenario,
    config: RunConfig,
    backend,
    *,
    prior: Sequence[Episode] = (),
    memory: LongTermMemory | None = None,
    status: tuple[str, str | None] | None = None,
    sink: Callable[..., None] = lambda **_: None,
    examples: Sequence | None = None,
    exemplars: Sequence | None = None,
) -> ScenarioResult:
    """Run the remaining episodes of one scenario, strictly in order."""
    episodes = list(prior)
    memory = memory if memory is not None else LongTermMemory(budget=config.memory_budget)

    def result(state: str, error: str | None = None) -> ScenarioResult:
        first = next((e.episode_index for e in episodes if e.success), None)
        return ScenarioResult(sc.scenario_id, sc.task_type, first, state, tuple(episode_summary(e) for e in episodes), error)

    if status is not None:
        return result(*status)
    if any(e.success for e in episodes):
        return result(STATUS_SUCCESS)
    if len(episodes) >= config.episodes:
        return result(STATUS_FAILED)

    env = make_env(sc.env_id)
    examples = _examples_for(sc) if examples is None else examples
    exemplars = load_reflection_exemplars(sc.env_id) if exemplars is None else exemplars
    for k in range(len(episodes) + 1, config.episodes + 1):
        completer = backend.bind(sc.scenario_id, k) if hasattr(backend, "bind") else backend
        try:
            ep = run_episode(sc, env, completer, memory, examples, config, episode_index=k)
        except EpisodeAborted as exc:
            error = f"{type(exc.cause).__name__}: {exc.cause}"
            if isinstance(exc.cause, BudgetError) and config.mode == "retry":
                # the expected end of the retry ablation: memory outgrew the context
                log.info("%s exhausted at episode %d: %s", sc.scenario_id, k, error)
                episodes.append(exc.episode)
                sink(episode=exc.episode, status={"scenario": sc.scenario_id, "status": STATUS_EXHAUSTED, "error": error})
                return result(STATUS_EXHAUSTED, error)
            log.error("%s aborted at episode %d: %s", sc.scenario_id, k, error)
            sink(status={"scenario": sc.scenario_id, "status": STATUS_ABORTED, "error": error})
            return result(STATUS_ABORTED, error)
        new: list[Reflection] = []
        if not ep.success and k < config.episodes:
            try:
                new = learn(ep, completer, config, task=sc.task_text, exemplars=exemplars)
            except ParseError as exc:
                log.warning("%s episode %d: reflection unusable, nothing stored: %s", sc.scenario_id, k, exc)
            except BackendError as exc:
                error = f"{type(exc).__name__}: {exc}"
                log.error("%s aborted while reflecting on episode %d: %s", sc.scenario_id, k, error)
                sink(status={"scenario": sc.scenario_id, "status": STATUS_ABORTED, "error": error})
                return result(STATUS_ABORTED, error)
        memory = record_reflections(memory, new)
        episodes.append(ep)
        sink(reflections=new, episode=ep)
        if ep.success:
            return result(STATUS_SUCCESS)
    return result(STATUS_FAILED)


def build_report(results: Sequence[ScenarioResult], config: RunConfig) -> RunReport:
    usage = {"prompt": 0, "completion": 0}
    for r in results:
        for e in r.episodes:
            for key in usage:
                usage[key] += e.get("usage", {}).get(key, 0)
    records = [
        {"scenario": r.scenario_id, "episode": e["episode"], "outcome": e["outcome"], "task_type": r.task_type}
        for r in results for e in r.episodes
    ]
    success_at, per_type = compute_metrics(
        records, config.episodes, [r.scenario_id for r in results], {r.scenario_id: r.task_type for r in results}
    )
    return RunReport(config.mode, config.digest(), config.episodes, tuple(results), success_at, per_type, usage)


def run_experiment(
    scenarios: Sequence[Scenario],
    config: RunConfig,
    backend,
    *,
    out_dir: str | Path | None = None,
    workers: int = 1,
) -> RunReport:
    """Run every scenario (resuming from ``out_dir`` when it already holds a run)."""
    if workers < 1:
        raise ValueError("workers must be >= 1")
    ids = [sc.scenario_id for sc in scenarios]
    if len(set(ids)) != len(ids):
        raise ValueError("duplicate scenarios")
    run_dir = RunDirectory(out_dir) if out_dir is not None else None
    state = run_dir.open(manifest_for(scenarios, config)) if run_dir else ResumeState()
    writer = _Writer(run_dir)

    def sink(reflections: Sequence[Reflection] = (), episode: Episode | None = None,
             status: dict[str, Any] | None = None) -> None:
        writer.submit(reflections, episode, status)

    def one(sc: Scenario) -> ScenarioResult:
        return run_scenario(
            sc, config, backend,
            prior=state.episodes.get(sc.scenario_id, ()),
            memory=state.memory_for(sc.scenario_id, config.memory_budget),
            status=state.status.get(sc.scenario_id),
            sink=sink,
        )

    try:
        if workers == 1:
            results = [one(sc) for sc in scenarios]
        else:
            with ThreadPoolExecutor(max_workers=workers, thread_name_prefix="hicrl-scenario") as pool:
                results = list(pool.map(one, scenarios))
    finally:
        writer.close()

    report = build_report(results, config)
    if run_dir is not None:
        run_dir.file(REPORT).write_text(report.to_json(), encoding="utf-8")
    return report


def load_report(run_dir: str | Path) -> RunReport:
    path = Path(run_dir) / REPORT
    return RunReport.from_dict(json.loads(path.read_text(encoding="utf-8")))


def load_episodes(run_dir: str | Path) -> list[Episode]:
    """Complete episodes of a run, read without modifying the directory."""
    path = Path(run_dir)
    if not (path / MANIFEST).exists():
        raise CorruptManifest(f"{path} is not a run directory (no {MANIFEST})")
    return [ep for eps in RunDirectory(path).load(trim=False).episodes.values() for ep in eps]
