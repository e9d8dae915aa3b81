"""Multi-hop question answering over a small fictional encyclopedia.

``search[entity]`` shows the opening of an article (exact title match after
normalization), ``lookup[keyword]`` steps through sentences of the current
article that mention the keyword, and ``finish[answer]`` ends the episode.
"""

from __future__ import annotations

import re
from typing import Any

from ..errors import BadSeed
from .base import NOTHING, Scenario, TextEnv, miniwiki_normalize
from .wiki_corpus import ARTICLES, QUESTIONS

SUMMARY_SENTENCES = 3
MAX_SIMILAR = 5
NO_MORE = "No more results."

_SENTENCE_END = re.compile(r"(?<=[.!?])\s+")


def sentences(text: str) -> list[str]:
    return [s for s in _SENTENCE_END.split(text.strip()) if s]


def similar_titles(corpus: dict[str, str], query: str) -> list[str]:
    """Titles sharing a word with the query, most shared words first, then alphabetical."""
    q = set(miniwiki_normalize(query).split())
    scored = []
    for title in corpus:
        shared = len(q & set(miniwiki_normalize(title).split()))
        if shared:
            scored.append((-shared, title))
    return [t for _, t in sorted(scored)][:MAX_SIMILAR]


def generate(seed: int) -> Scenario:
    if not 0 <= seed < len(QUESTIONS):
        raise BadSeed(f"miniwiki has questions 0..{len(QUESTIONS) - 1}, not {seed}")
    question, answer, qtype, plan = QUESTIONS[seed]
    oracle = tuple({"goal": goal, "actions": list(actions)} for goal, actions in plan)
    return Scenario("miniwiki", seed, question, qtype, {"answer": answer}, {"corpus": dict(ARTICLES)}, oracle)


class MiniWiki(TextEnv):
    env_id = "miniwiki"

    def _build(self, scenario: Scenario) -> dict[str, Any]:
        corpus = scenario.world.get("corpus") or ARTICLES
        self.corpus = dict(corpus)
        self._index = {miniwiki_normalize(t): t for t in self.corpus}
        return {"article": None, "keyword": None, "cursor": 0}

    def _observe_start(self) -> str:
        return self.scenario.task_text

    def _apply(self, action: str) -> tuple[str, float, bool]:
        m = re.fullmatch(r"(search|lookup|finish)\[(.*)\]", action, flags=re.IGNORECASE | re.DOTALL)
        if not m or not m.group(2).strip():
            return NOTHING, 0.0, False
        verb, arg = m.group(1).lower(), m.group(2).strip()
        if verb == "search":
            title = self._index.get(miniwiki_normalize(arg))
            if title is None:
                return f"Could not find [{arg}]. Similar: {similar_titles(self.corpus, arg)}.", 0.0, False
            self.state.update(article=title, keyword=None, cursor=0)
            return " ".join(sentences(self.corpus[title])[:SUMMARY_SENTENCES]), 0.0, False
        if verb == "lookup":
            return self._lookup(arg), 0.0, False
        correct = miniwiki_normalize(arg) == miniwiki_normalize(self.scenario.gold["answer"])
        reward = 1.0 if correct else 0.0
        return f"Episode finished, reward = {int(reward)}.", reward, True

    def _lookup(self, keyword: str) -> str:
        s = self.state
        if s["article"] is None:
            return NOTHING
        key = keyword.lower()
        hits = [x for x in sentences(self.corpus[s["article"]]) if key in x.lower()]
        if key != s["keyword"]:
            s.update(keyword=key, cursor=0)
        if not hits:
            return NO_MORE
        if s["cursor"] >= len(hits):
            # exhausted: report it once, then start over
            s["cursor"] = 0
            return NO_MORE
        i = s["cursor"]
        s["cursor"] += 1
        return f"(Result {i + 1} / {len(hits)}) {hits[i]}"
