"""Regenerate the bundled scenario packs and few-shot example files.

    python -m hicrl.envs.build_packs [--out DIR] [--fewshot-out DIR]

Few-shot examples replay oracle plans on scenarios outside the bundled packs,
so no example ever shows the solution to an evaluated task.
"""

from __future__ import annotations

import argparse
import json
from pathlib import Path
from typing import Any

from ..core import Tag, Trajectory
from ..promptkit import EXAMPLE_SEP, render_trajectory
from . import make_env, minihouse, minishop, miniwiki
from .base import Scenario
from .wiki_corpus import ARTICLES, QUESTIONS

HOUSE_SEEDS = range(24)  # seed % 6 picks the task type, so four of each
SHOP_SEEDS = range(20)
DEFAULT_OUT = Path(__file__).resolve().parent.parent / "data" / "packs"
DEFAULT_FEWSHOT_OUT = DEFAULT_OUT.parent / "fewshot"
EXAMPLE_SEEDS_FROM = 102  # a multiple of 6, so seed - EXAMPLE_SEEDS_FROM = type index

# extra two-hop questions over the same corpus, used only as worked examples
_WIKI_EXAMPLE_QUESTIONS = (
    ("In what year was the school where Emil Sorensen taught founded?", "1850", "bridge", (
        ("find where Emil Sorensen taught", ("search[Emil Sorensen]", "lookup[taught]")),
        ("find when the Harl Academy of Art was founded", ("search[Harl Academy of Art]",)),
        ("answer with the year", ("finish[1850]",)))),
    ("What is the highest summit of the range where the Marrow River rises?", "Mount Corrin", "bridge", (
        ("find where the Marrow River rises", ("search[Marrow River]",)),
        ("find the highest summit of the Grey Fells", ("search[Grey Fells]",)),
        ("answer with the summit", ("finish[Mount Corrin]",)))),
)


def house_pack() -> dict[str, Any]:
    return {"env_id": "minihouse", "scenarios": [minihouse.generate(s).to_dict() for s in HOUSE_SEEDS]}


def shop_pack() -> dict[str, Any]:
    catalog = minishop.build_catalog()
    entries = [minishop.generate(s, catalog).to_dict(include_world=False) for s in SHOP_SEEDS]
    return {"env_id": "minishop", "shared": {"catalog": catalog}, "scenarios": entries}


def wiki_pack() -> dict[str, Any]:
    entries = [miniwiki.generate(s).to_dict(include_world=False) for s in range(len(QUESTIONS))]
    return {"env_id": "miniwiki", "shared": {"corpus": ARTICLES}, "scenarios": entries}


def demonstrate(scenario: Scenario) -> tuple[str, str]:
    """(task observation, tagged body) of the oracle plan played in the real environment."""
    env = make_env(scenario.env_id)
    task = env.reset(scenario)
    traj = Trajectory()
    for seg in scenario.oracle:
        traj = traj.add(Tag.GOAL, seg["goal"][0].upper() + seg["goal"][1:] + ".")
        traj = traj.add(Tag.THINK, f"To {seg['goal']}, I will " + ", then ".join(seg["actions"]) + ".")
        for i, action in enumerate(seg["actions"]):
            result = env.step(action)
            traj = traj.add(Tag.ACTION, action, result.observation)
            traj = traj.add(Tag.FINISH, "Yes" if i == len(seg["actions"]) - 1 else "No")
    if not result.won:
        raise RuntimeError(f"oracle for {scenario.scenario_id} does not win")
    return task, render_trajectory(traj)


def _example_file(scenarios: list[Scenario]) -> str:
    blocks = []
    for sc in scenarios:
        task, body = demonstrate(sc)
        blocks.append(f"Task: {task}\n{body}")
    return ("\n" + EXAMPLE_SEP + "\n").join(blocks) + "\n"


def write_fewshot(out: Path = DEFAULT_FEWSHOT_OUT) -> list[Path]:
    out.mkdir(parents=True, exist_ok=True)
    files: dict[str, list[Scenario]] = {}
    for t, task_type in enumerate(minihouse.TASK_TYPES):
        seeds = [EXAMPLE_SEEDS_FROM + t + 6 * k for k in range(2)]  # seed % 6 picks the type
        files[f"minihouse_{task_type}.txt"] = [minihouse.generate(s) for s in seeds]
    catalog = minishop.build_catalog()
    files["minishop.txt"] = [minishop.generate(EXAMPLE_SEEDS_FROM + k, catalog) for k in range(2)]
    files["miniwiki.txt"] = [
        Scenario("miniwiki", EXAMPLE_SEEDS_FROM + k, q, qtype, {"answer": a}, {"corpus": ARTICLES},
                 tuple({"goal": g, "actions": list(acts)} for g, acts in plan))
        for k, (q, a, qtype, plan) in enumerate(_WIKI_EXAMPLE_QUESTIONS)
    ]
    written = []
    for name, scenarios in files.items():
        path = out / name
        path.write_text(_example_file(scenarios), encoding="utf-8")
        written.append(path)
    return written


def write_packs(out: Path = DEFAULT_OUT) -> list[Path]:
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for name, pack in (("minihouse", house_pack()), ("minishop", shop_pack()), ("miniwiki", wiki_pack())):
        path = out / f"{name}.json"
        path.write_text(json.dumps(pack, indent=1, sort_keys=True) + "\n", encoding="utf-8")
        written.append(path)
    return written


def main(argv: list[str] | None = None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=Path, default=DEFAULT_OUT)
    ap.add_argument("--fewshot-out", type=Path, default=DEFAULT_FEWSHOT_OUT)
    args = ap.parse_args(argv)
    for path in write_packs(args.out) + write_fewshot(args.fewshot_out):
        print(path)


if __name__ == "__main__":
    main()
