"""A single-room household simulator with numbered receptacles and objects.

Six task families: put, clean+put, heat+put, cool+put, examine under a lamp,
and put-two. Worlds are a pure function of the seed.
"""

from __future__ import annotations

import random
import re
from typing import Any

from .base import NOTHING, Scenario, TextEnv

TASK_TYPES = ("put", "clean", "heat", "cool", "examine", "puttwo")

OPENABLE = {"cabinet", "drawer", "fridge", "microwave"}
LAMP = "desklamp 1"

# receptacle type -> (min count, max count)
_RECEPTACLES = {
    "cabinet": (2, 4),
    "countertop": (1, 2),
    "drawer": (1, 3),
    "shelf": (1, 2),
    "fridge": (1, 1),
    "microwave": (1, 1),
    "sinkbasin": (1, 1),
    "stoveburner": (1, 2),
    "sidetable": (1, 1),
    "desk": (1, 1),
    "garbagecan": (1, 1),
}

# object type -> receptacle types it may start in
_HOMES = {
    "apple": ("countertop", "fridge", "garbagecan"),
    "egg": ("countertop", "fridge"),
    "potato": ("countertop", "fridge", "garbagecan"),
    "tomato": ("countertop", "fridge"),
    "lettuce": ("countertop", "fridge"),
    "bread": ("countertop", "cabinet"),
    "mug": ("countertop", "cabinet", "shelf"),
    "cup": ("countertop", "cabinet", "shelf"),
    "bowl": ("countertop", "cabinet", "shelf"),
    "plate": ("countertop", "cabinet"),
    "spoon": ("countertop", "drawer"),
    "knife": ("countertop", "drawer"),
    "cellphone": ("desk", "sidetable", "drawer"),
    "book": ("desk", "sidetable", "shelf"),
    "cd": ("desk", "drawer", "shelf"),
    "pen": ("desk", "drawer", "sidetable"),
    "keychain": ("sidetable", "drawer", "shelf"),
    "creditcard": ("desk", "drawer", "sidetable"),
    "alarmclock": ("desk", "sidetable", "shelf"),
}

# task type -> (candidate objects, candidate target receptacle types)
_TASKS = {
    "put": (("mug", "cup", "bowl", "book", "cd", "spoon", "apple", "keychain"), ("shelf", "cabinet", "drawer", "countertop", "desk")),
    "clean": (("plate", "mug", "bowl", "spoon", "knife", "apple", "lettuce", "cup"), ("countertop", "cabinet", "shelf", "fridge")),
    "heat": (("egg", "potato", "apple", "mug", "tomato", "bread", "plate", "cup"), ("countertop", "cabinet", "shelf", "garbagecan")),
    "cool": (("mug", "apple", "tomato", "lettuce", "potato", "bread", "cup", "egg"), ("cabinet", "countertop", "shelf", "microwave")),
    "examine": (("alarmclock", "book", "cd", "pen", "keychain", "cellphone", "creditcard"), ()),
    "puttwo": (("cellphone", "book", "cd", "keychain", "creditcard", "pen", "spoon", "knife"), ("drawer", "shelf", "desk", "sidetable", "cabinet")),
}

_PROCESS = {"clean": ("sinkbasin", "clean", "cleaned"), "heat": ("microwave", "heat", "hot"), "cool": ("fridge", "cool", "cool")}


def task_text(task_type: str, obj: str, target: str | None) -> str:
    return {
        "put": f"put some {obj} in {target}.",
        "clean": f"put a clean {obj} in {target}.",
        "heat": f"heat some {obj} and put it in {target}.",
        "cool": f"cool some {obj} and put it in {target}.",
        "examine": f"look at {obj} under the desklamp.",
        "puttwo": f"put two {obj} in {target}.",
    }[task_type]


def _article(name: str) -> str:
    return ("an " if name[0] in "aeiou" else "a ") + name


def _listing(names: list[str]) -> str:
    items = [_article(n) for n in names]
    if not items:
        return "nothing"
    if len(items) == 1:
        return items[0]
    return ", ".join(items[:-1]) + ", and " + items[-1]


def generate_world(seed: int, task_type: str) -> tuple[dict[str, Any], dict[str, Any]]:
    """Return (world, gold) for a seed; deterministic."""
    rng = random.Random(f"minihouse:{seed}")
    receptacles: dict[str, dict[str, Any]] = {}
    for rtype, (lo, hi) in _RECEPTACLES.items():
        for i in range(1, rng.randint(lo, hi) + 1):
            receptacles[f"{rtype} {i}"] = {"type": rtype, "open": rtype not in OPENABLE, "contents": []}

    objects_pool, targets = _TASKS[task_type]
    otype = rng.choice(objects_pool)
    ttype = rng.choice([t for t in targets if t not in _HOMES[otype]] or list(targets)) if targets else None

    def by_type(rtype: str) -> list[str]:
        return [name for name, r in receptacles.items() if r["type"] == rtype]

    objects: dict[str, dict[str, Any]] = {}
    counts: dict[str, int] = {}

    def place(o: str, avoid: str | None) -> None:
        counts[o] = counts.get(o, 0) + 1
        name = f"{o} {counts[o]}"
        homes = [h for h in _HOMES[o] if h != avoid] or list(_HOMES[o])
        where = rng.choice(by_type(rng.choice(homes)))
        receptacles[where]["contents"].append(name)
        objects[name] = {"type": o, "attrs": []}

    for _ in range(2 if task_type == "puttwo" else 1):
        place(otype, ttype)
    if task_type == "puttwo" and rng.random() < 0.5:
        place(otype, ttype)
    for o in rng.sample(sorted(set(_HOMES) - {otype}), rng.randint(5, 8)):
        place(o, None)
    lamp_home = rng.choice(by_type("sidetable") + by_type("desk"))
    receptacles[lamp_home]["contents"].append(LAMP)
    objects[LAMP] = {"type": "desklamp", "attrs": [], "on": False}
    for r in receptacles.values():
        r["contents"].sort(key=_natural)

    world = {"receptacles": receptacles, "objects": objects}
    gold = {"predicate": task_type, "object_type": otype, "target_type": ttype}
    return world, gold


def _natural(name: str) -> tuple[str, int]:
    base, _, num = name.rpartition(" ")
    return (base, int(num)) if num.isdigit() else (name, 0)


def plan_oracle(world: dict[str, Any], gold: dict[str, Any]) -> list[dict[str, Any]]:
    """A goal-annotated action script that solves the task from the initial world."""
    recs = world["receptacles"]
    otype, ttype, task = gold["object_type"], gold["target_type"], gold["predicate"]
    opened: set[str] = set()
    at: list[str | None] = [None]

    def goto(r: str) -> list[str]:
        if at[0] == r:
            return []
        at[0] = r
        return [f"go to {r}"]

    def visit(r: str) -> list[str]:
        acts = goto(r)
        if recs[r]["type"] in OPENABLE and r not in opened:
            acts.append(f"open {r}")
            opened.add(r)
        return acts

    def locate(name: str) -> str:
        return next(r for r, rec in recs.items() if name in rec["contents"])

    instances = sorted((n for n, o in world["objects"].items() if o["type"] == otype), key=_natural)
    target = sorted((r for r, rec in recs.items() if rec["type"] == ttype), key=_natural)[0] if ttype else None
    prep = "in/on"
    segments = []
    for obj in instances[: 2 if task == "puttwo" else 1]:
        src = locate(obj)
        segments.append({"goal": f"find and take the {otype}", "actions": visit(src) + [f"take {obj} from {src}"]})
        if task in _PROCESS:
            rtype, verb, _ = _PROCESS[task]
            device = sorted(r for r, rec in recs.items() if rec["type"] == rtype)[0]
            segments.append({"goal": f"{verb} the {otype} with the {rtype}",
                             "actions": goto(device) + [f"{verb} {obj} with {device}"]})
        if task == "examine":
            lamp_at = locate(LAMP)
            segments.append({"goal": f"turn on the desklamp while holding the {otype}",
                             "actions": goto(lamp_at) + [f"use {LAMP}"]})
        else:
            segments.append({"goal": f"put the {otype} in the {ttype}",
                             "actions": visit(target) + [f"put {obj} {prep} {target}"]})
    return segments


def generate(seed: int) -> Scenario:
    task_type = TASK_TYPES[seed % len(TASK_TYPES)]
    world, gold = generate_world(seed, task_type)
    return Scenario(
        env_id="minihouse",
        seed=seed,
        task_text=task_text(task_type, gold["object_type"], gold["target_type"]),
        task_type=task_type,
        gold=gold,
        world=world,
        oracle=tuple(plan_oracle(world, gold)),
    )


_PATTERNS = [
    ("go", re.compile(r"^go to (.+)$")),
    ("open", re.compile(r"^open (.+)$")),
    ("close", re.compile(r"^close (.+)$")),
    ("take", re.compile(r"^take (.+?) from (.+)$")),
    ("put", re.compile(r"^put (.+?) (?:in/on|in|on) (.+)$")),
    ("heat", re.compile(r"^heat (.+?) with (.+)$")),
    ("cool", re.compile(r"^cool (.+?) with (.+)$")),
    ("clean", re.compile(r"^clean (.+?) with (.+)$")),
    ("use", re.compile(r"^use (.+)$")),
    ("examine", re.compile(r"^examine (.+)$")),
]


class MiniHouse(TextEnv):
    env_id = "minihouse"

    def _build(self, scenario: Scenario) -> dict[str, Any]:
        world = scenario.world or generate_world(scenario.seed, scenario.task_type)[0]
        state = {
            "receptacles": {k: {**v, "contents": list(v["contents"])} for k, v in world["receptacles"].items()},
            "objects": {k: {**v, "attrs": list(v["attrs"])} for k, v in world["objects"].items()},
            "location": None,
            "holding": None,
        }
        return state

    def _observe_start(self) -> str:
        names = sorted(self.state["receptacles"], key=_natural)
        return (
            f"You are in the middle of a room. Looking quickly around you, you see {_listing(names)}.\n"
            f"Your task is to: {self.scenario.task_text}"
        )

    # -- helpers --
    def _rec(self, name: str) -> dict[str, Any] | None:
        return self.state["receptacles"].get(name)

    def _describe(self, name: str) -> str:
        rec = self._rec(name)
        if not rec["open"]:
            return f"The {name} is closed."
        contents = _listing(rec["contents"])
        if rec["type"] in OPENABLE:
            return f"The {name} is open. In it, you see {contents}."
        return f"On the {name}, you see {contents}."

    def _here(self) -> dict[str, Any] | None:
        loc = self.state["location"]
        return self._rec(loc) if loc else None

    def _visible(self, obj: str) -> bool:
        here = self._here()
        return here is not None and here["open"] and obj in here["contents"]

    # -- transitions --
    def _apply(self, action: str) -> tuple[str, float, bool]:
        action = action.lower()
        for kind, pattern in _PATTERNS:
            m = pattern.match(action)
            if m:
                obs = getattr(self, f"_do_{kind}")(*m.groups())
                break
        else:
            obs = NOTHING
        if obs != NOTHING and self._solved():
            return obs, 1.0, True
        return obs, 0.0, False

    def _do_go(self, r: str) -> str:
        if self._rec(r) is None or self.state["location"] == r:
            return NOTHING
        self.state["location"] = r
        return f"You arrive at {r}. " + self._describe(r)

    def _do_open(self, r: str) -> str:
        rec = self._rec(r)
        if rec is None or self.state["location"] != r or rec["type"] not in OPENABLE or rec["open"]:
            return NOTHING
        rec["open"] = True
        return f"You open the {r}. " + self._describe(r)

    def _do_close(self, r: str) -> str:
        rec = self._rec(r)
        if rec is None or self.state["location"] != r or rec["type"] not in OPENABLE or not rec["open"]:
            return NOTHING
        rec["open"] = False
        return f"You close the {r}."

    def _do_take(self, o: str, r: str) -> str:
        rec = self._rec(r)
        if (rec is None or self.state["location"] != r or not rec["open"] or o not in rec["contents"]
                or self.state["holding"] is not None or o == LAMP):
            return NOTHING
        rec["contents"].remove(o)
        self.state["holding"] = o
        return f"You pick up the {o} from the {r}."

    def _do_put(self, o: str, r: str) -> str:
        rec = self._rec(r)
        if rec is None or self.state["location"] != r or not rec["open"] or self.state["holding"] != o:
            return NOTHING
        rec["contents"].append(o)
        rec["contents"].sort(key=_natural)
        self.state["holding"] = None
        return f"You put the {o} in/on the {r}."

    def _process(self, o: str, r: str, device: str, verb: str, attr: str) -> str:
        rec = self._rec(r)
        if rec is None or rec["type"] != device or self.state["location"] != r or self.state["holding"] != o:
            return NOTHING
        attrs = self.state["objects"][o]["attrs"]
        if verb == "heat" and "cool" in attrs:
            attrs.remove("cool")
        if verb == "cool" and "hot" in attrs:
            attrs.remove("hot")
        if attr not in attrs:
            attrs.append(attr)
            attrs.sort()
        return f"You {verb} the {o} using the {r}."

    def _do_heat(self, o: str, r: str) -> str:
        return self._process(o, r, "microwave", "heat", "hot")

    def _do_cool(self, o: str, r: str) -> str:
        return self._process(o, r, "fridge", "cool", "cool")

    def _do_clean(self, o: str, r: str) -> str:
        return self._process(o, r, "sinkbasin", "clean", "cleaned")

    def _do_use(self, lamp: str) -> str:
        obj = self.state["objects"].get(lamp)
        if obj is None or obj["type"] != "desklamp" or not self._visible(lamp) or obj["on"]:
            return NOTHING
        obj["on"] = True
        return f"You turn on the {lamp}."

    def _do_examine(self, x: str) -> str:
        if self._rec(x) is not None and self.state["location"] == x:
            return self._describe(x)
        obj = self.state["objects"].get(x)
        if obj is None or not (self.state["holding"] == x or self._visible(x)):
            return NOTHING
        if obj["type"] == "desklamp":
            return f"The {x} is {'on' if obj['on'] else 'off'}."
        state = ", ".join(obj["attrs"])
        return f"There's nothing special about the {x}." if not state else f"The {x} is {state}."

    # -- goal test --
    def _solved(self) -> bool:
        gold = self.scenario.gold
        otype, ttype, task = gold["object_type"], gold["target_type"], gold["predicate"]
        objs = self.state["objects"]
        if task == "examine":
            held = self.state["holding"]
            lamp_on_here = self._visible(LAMP) and objs[LAMP]["on"]
            return held is not None and objs[held]["type"] == otype and lamp_on_here
        need_attr = _PROCESS[task][2] if task in _PROCESS else None
        for rec in self.state["receptacles"].values():
            if rec["type"] != ttype:
                continue
            hits = [o for o in rec["contents"] if objs[o]["type"] == otype and (need_attr is None or need_attr in objs[o]["attrs"])]
            if len(hits) >= (2 if task == "puttwo" else 1):
                return True
        return False
