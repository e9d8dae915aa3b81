"""A small web-shop: search page, paged results, item pages with options.

Buying scores the purchase against the hidden constraints; only a perfect
score counts as success.
"""

from __future__ import annotations

import itertools
import math
import random
import re
import string
from typing import Any

from .base import NOTHING, Scenario, TextEnv, minishop_score

CATALOG_SEED = 2024
PAGE_SIZE = 10

# category -> (attribute pool, {option group: value pool})
_CATEGORIES = {
    "jacket": (("waterproof", "denim", "fleece lined", "hooded", "lightweight", "windproof"),
               {"color": ("black", "blue", "olive", "red"), "size": ("small", "medium", "large", "x-large")}),
    "headphones": (("wireless", "noise cancelling", "over-ear", "foldable", "bass boost", "sweatproof"),
                   {"color": ("black", "white", "silver", "navy")}),
    "running shoes": (("lightweight", "breathable", "non-slip", "cushioned", "waterproof", "wide fit"),
                      {"color": ("black", "grey", "blue", "white"), "size": ("7", "8", "9", "10", "11")}),
    "coffee mug": (("ceramic", "insulated", "dishwasher safe", "microwave safe", "travel", "lidded"),
                   {"color": ("white", "black", "green", "red"), "capacity": ("12 oz", "16 oz", "20 oz")}),
    "backpack": (("waterproof", "laptop sleeve", "lightweight", "anti-theft", "usb charging", "padded straps"),
                 {"color": ("black", "grey", "navy", "green"), "volume": ("20l", "30l", "40l")}),
    "desk lamp": (("led", "dimmable", "usb charging", "adjustable arm", "touch control", "clamp mount"),
                  {"color": ("black", "white", "silver")}),
    "phone case": (("shockproof", "slim", "magnetic", "clear", "kickstand", "waterproof"),
                   {"color": ("black", "clear", "pink", "blue"), "model": ("model a", "model b", "model c")}),
    "yoga mat": (("non-slip", "extra thick", "eco-friendly", "foldable", "lightweight", "sweat resistant"),
                 {"color": ("purple", "black", "teal", "pink"), "thickness": ("4mm", "6mm", "8mm")}),
    "water bottle": (("insulated", "bpa free", "leak proof", "stainless steel", "collapsible", "wide mouth"),
                     {"color": ("black", "white", "teal", "orange"), "capacity": ("500 ml", "750 ml", "1 liter")}),
    "t-shirt": (("cotton", "moisture wicking", "crew neck", "v-neck", "slim fit", "organic"),
                {"color": ("white", "black", "grey", "red"), "size": ("small", "medium", "large", "x-large")}),
}
_BRANDS = ("Northpeak", "Lumo", "Vantage", "Kestrel", "Brightwell", "Orla", "Tidewater", "Ember & Oak", "Sora", "Halden")

_TOKEN = re.compile(r"[a-z0-9]+")


def tokens(text: str) -> set[str]:
    return set(_TOKEN.findall(text.lower()))


def build_catalog(seed: int = CATALOG_SEED, per_category: int = 5) -> list[dict[str, Any]]:
    """50 items: category, three attributes, one to three option groups, price."""
    rng = random.Random(f"minishop-catalog:{seed}")
    items, used = [], set()
    for category, (attr_pool, groups) in _CATEGORIES.items():
        for _ in range(per_category):
            while True:
                item_id = "B0" + "".join(rng.choice(string.ascii_uppercase + string.digits) for _ in range(6))
                if item_id not in used:
                    used.add(item_id)
                    break
            attrs = sorted(rng.sample(attr_pool, 3))
            names = sorted(groups)
            chosen = ["color"] + [g for g in names if g != "color"][: rng.randint(0, len(names) - 1)]
            options = {g: sorted(rng.sample(groups[g], rng.randint(2, len(groups[g])))) for g in sorted(chosen)}
            title = f"{rng.choice(_BRANDS)} {attrs[0].title()} {attrs[1].title()} {category.title()}"
            price = round(rng.uniform(8, 150), 2)
            items.append({"id": item_id, "title": title, "category": category, "attributes": attrs,
                          "options": options, "price": price})
    items.sort(key=lambda it: it["id"])
    return items


def satisfies(item: dict[str, Any], gold: dict[str, Any]) -> bool:
    """Whether some option choice on ``item`` scores 1.0 against ``gold``."""
    return (
        item["category"] == gold["category"]
        and all(a in item["attributes"] for a in gold["attributes"])
        and all(v in item["options"].get(g, ()) for g, v in gold["options"].items())
        and item["price"] <= gold["price_max"]
    )


def best_score(catalog: list[dict[str, Any]], gold: dict[str, Any]) -> float:
    """Exhaustive scan over every item and every option combination."""
    best = 0.0
    for item in catalog:
        groups = sorted(item["options"])
        for combo in itertools.product(*(item["options"][g] for g in groups)):
            best = max(best, minishop_score(item, dict(zip(groups, combo)), gold))
    return best


def instruction(gold: dict[str, Any]) -> str:
    attrs = ", ".join(gold["attributes"])
    opts = " and ".join(f"{g}: {v}" for g, v in gold["options"].items())
    article = "an" if attrs[0] in "aeiou" else "a"
    return (f"i am looking for {article} {attrs} {gold['category']} with {opts}, "
            f"and price lower than {gold['price_max']:.2f} dollars")


def search(catalog: list[dict[str, Any]], query: str) -> list[dict[str, Any]]:
    """Items sharing at least one token with the query, by overlap then id."""
    q = tokens(query)
    scored = []
    for item in catalog:
        text = " ".join([item["title"], item["category"], *item["attributes"]])
        overlap = len(q & tokens(text))
        if overlap:
            scored.append((-overlap, item["id"], item))
    return [it for _, _, it in sorted(scored, key=lambda t: (t[0], t[1]))]


def generate(seed: int, catalog: list[dict[str, Any]] | None = None) -> Scenario:
    catalog = catalog if catalog is not None else build_catalog()
    rng = random.Random(f"minishop:{seed}")
    for _ in range(200):
        target = rng.choice(catalog)
        options = {g: rng.choice(vals) for g, vals in sorted(target["options"].items())}
        price_max = float(math.ceil(target["price"] / 10) * 10)
        for k in (1, 2, 3):
            attrs = sorted(rng.sample(target["attributes"], k))
            gold = {"category": target["category"], "attributes": attrs, "options": options, "price_max": price_max}
            matches = [it["id"] for it in catalog if satisfies(it, gold)]
            if matches == [target["id"]]:
                break
        else:
            continue
        query = " ".join(attrs + [target["category"]])
        results = search(catalog, query)
        rank = [it["id"] for it in results].index(target["id"])
        nav = ["click[Next >]"] * (rank // PAGE_SIZE)
        oracle = (
            {"goal": f"search for the {' '.join(attrs)} {target['category']}", "actions": [f"search[{query}]"] + nav},
            {"goal": f"open item {target['id']} and choose its options",
             "actions": [f"click[{target['id']}]"] + [f"click[{v}]" for v in options.values()]},
            {"goal": "buy the item", "actions": ["click[Buy Now]"]},
        )
        return Scenario("minishop", seed, instruction(gold), "shop", gold, {"catalog": catalog}, oracle)
    raise RuntimeError(f"no uniquely satisfiable target for seed {seed}")


class MiniShop(TextEnv):
    env_id = "minishop"

    def _build(self, scenario: Scenario) -> dict[str, Any]:
        catalog = scenario.world.get("catalog") or build_catalog()
        self.catalog = {it["id"]: it for it in catalog}
        self._items = catalog
        return {"page": "search", "query": None, "results": [], "offset": 0, "item": None, "selected": {}}

    def _search_page(self) -> str:
        return (f"WebShop\nInstruction: {self.scenario.task_text}\n"
                "Type search[your query] to look for products.")

    def _observe_start(self) -> str:
        return self._search_page()

    def _results_page(self) -> str:
        s = self.state
        total = len(s["results"])
        if not total:
            return f"No results for '{s['query']}'. Actions: click[Back to Search]"
        page = s["results"][s["offset"]: s["offset"] + PAGE_SIZE]
        more = s["offset"] + PAGE_SIZE < total
        actions = "click[Back to Search]" + (", click[Next >]" if more else "") + ", click[<item id>]"
        lines = [f"Results {s['offset'] + 1}-{s['offset'] + len(page)} of {total} for '{s['query']}'. Actions: {actions}"]
        for item_id in page:
            it = self.catalog[item_id]
            lines.append(f"{it['id']}: {it['title']}, ${it['price']:.2f}")
        return "\n".join(lines)

    def _item_page(self) -> str:
        it = self.catalog[self.state["item"]]
        lines = [it["title"], f"Price: ${it['price']:.2f}", f"Category: {it['category']}",
                 f"Features: {', '.join(it['attributes'])}"]
        for group, values in sorted(it["options"].items()):
            lines.append(f"{group}: {' | '.join(values)}")
        sel = self.state["selected"]
        if sel:
            lines.append("Selected: " + ", ".join(f"{g}={v}" for g, v in sorted(sel.items())))
        lines.append("Actions: click[<option value>], click[Buy Now], click[Back to Search]")
        return "\n".join(lines)

    def _apply(self, action: str) -> tuple[str, float, bool]:
        s = self.state
        m = re.fullmatch(r"search\[(.*)\]", action, flags=re.IGNORECASE)
        if m:
            if s["page"] != "search" or not m.group(1).strip():
                return NOTHING, 0.0, False
            s.update(page="results", query=m.group(1).strip(), offset=0,
                     results=[it["id"] for it in search(self._items, m.group(1))])
            return self._results_page(), 0.0, False
        m = re.fullmatch(r"click\[(.*)\]", action, flags=re.IGNORECASE)
        if not m:
            return NOTHING, 0.0, False
        target = m.group(1).strip().lower()
        if target == "back to search" and s["page"] != "search":
            s.update(page="search", query=None, results=[], offset=0, item=None, selected={})
            return self._search_page(), 0.0, False
        if s["page"] == "results":
            if target == "next >" and s["offset"] + PAGE_SIZE < len(s["results"]):
                s["offset"] += PAGE_SIZE
                return self._results_page(), 0.0, False
            shown = s["results"][s["offset"]: s["offset"] + PAGE_SIZE]
            hit = next((i for i in shown if i.lower() == target), None)
            if hit:
                s.update(page="item", item=hit, selected={})
                return self._item_page(), 0.0, False
        if s["page"] == "item":
            item = self.catalog[s["item"]]
            if target == "buy now":
                score = minishop_score(item, s["selected"], self.scenario.gold)
                s["page"] = "done"
                return f"Thank you for shopping with us! Your purchase scored {score:.2f}.", score, True
            for group, values in sorted(item["options"].items()):
                if target in values:
                    s["selected"] = {**s["selected"], group: target}
                    return self._item_page(), 0.0, False
        return NOTHING, 0.0, False
