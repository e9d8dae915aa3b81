from __future__ import annotations

import re

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hicrl.core import (
    Episode,
    Goal,
    LongTermMemory,
    Reflection,
    Step,
    Tag,
    Trajectory,
    episode_to_jsonl,
    episodes_from_jsonl,
    grammar_violations,
    record_reflections,
)
from helpers import build_trajectory, valid_trajectories

# prefixes of (GT(AF)*)+ written over single letters; independent of the transition table
_PREFIX_LANGUAGE = re.compile(r"^(GT(AF)*)*(G|GT(AF)*A)?$")
_LETTER = {Tag.GOAL: "G", Tag.THINK: "T", Tag.ACTION: "A", Tag.FINISH: "F"}


def _steps(tags: list[Tag], verdicts: list[bool] | None = None) -> list[Step]:
    verdicts = list(verdicts or [])
    out = []
    for i, tag in enumerate(tags):
        if tag is Tag.FINISH:
            content = "Yes" if (verdicts.pop(0) if verdicts else False) else "No"
        else:
            content = "x"
        out.append(Step(i, tag, content, "obs" if tag is Tag.ACTION else None))
    return out


class TestValidation:
    def test_observation_only_on_actions(self):
        with pytest.raises(ValueError):
            Step(0, Tag.GOAL, "g", "obs")
        with pytest.raises(ValueError):
            Step(0, Tag.ACTION, "go to desk 1")

    def test_empty_content_rejected(self):
        with pytest.raises(ValueError):
            Step(0, Tag.THINK, "   ")

    def test_indices_must_be_contiguous(self):
        with pytest.raises(ValueError):
            Trajectory((Step(1, Tag.GOAL, "g"),))

    def test_single_active_goal(self):
        with pytest.raises(ValueError):
            Trajectory(goals=(Goal(0, "a"), Goal(1, "b")))

    def test_goal_closes_once(self):
        done = Goal(0, "a").finish()
        assert done.status == "finished"
        with pytest.raises(ValueError):
            done.leave_open()

    def test_reflection_goal_text_only_on_low(self):
        with pytest.raises(ValueError):
            Reflection("low", "body", 1, "s")
        with pytest.raises(ValueError):
            Reflection("high", "body", 1, "s", goal_text="g")
        with pytest.raises(ValueError):
            Reflection("medium", "body", 1, "s")

    def test_episode_outcome_checked(self):
        with pytest.raises(ValueError):
            Episode("s", Trajectory(), "maybe", 0.0)

    def test_memory_budget_positive(self):
        with pytest.raises(ValueError):
            LongTermMemory(budget=0)

    def test_discounted_return(self):
        traj = build_trajectory([("g", ["a", "b", "c"], True)])
        ep = Episode("s", traj, "success", 1.0)
        assert ep.discounted_return(0.5) == pytest.approx(0.25)


class TestGrammar:
    @settings(max_examples=300, deadline=None)
    @given(st.lists(st.sampled_from(list(Tag)), max_size=14))
    def test_matches_independent_language(self, tags):
        word = "".join(_LETTER[t] for t in tags)
        assert (not grammar_violations(_steps(tags))) == bool(_PREFIX_LANGUAGE.match(word))

    @settings(max_examples=200, deadline=None)
    @given(valid_trajectories())
    def test_generated_trajectories_are_strictly_valid(self, traj):
        assert grammar_violations(traj.steps, strict=True) == []

    def test_strict_honours_verdicts(self):
        G, T, A, F = Tag.GOAL, Tag.THINK, Tag.ACTION, Tag.FINISH
        assert grammar_violations(_steps([G, T, A, F, G], [False])) == []
        assert grammar_violations(_steps([G, T, A, F, G], [False]), strict=True)
        assert grammar_violations(_steps([G, T, A, F, A], [True]), strict=True)
        assert grammar_violations(_steps([G, T, A, F, G], [True]), strict=True) == []
        assert grammar_violations(_steps([G, T, G]), strict=True)

    def test_violation_message(self):
        assert grammar_violations(_steps([Tag.THINK])) == ["step 0: [Think] after start"]


def _refl(episode: int, n: int, scenario: str = "s") -> list[Reflection]:
    return [Reflection("high", f"lesson {episode}.{i}", episode, scenario) for i in range(n)]


class TestMemory:
    def test_three_entries_recorded(self):
        mem = record_reflections(LongTermMemory(), _refl(1, 3))
        assert len(mem) == 3

    def test_whole_episode_eviction(self):
        mem = record_reflections(LongTermMemory(), _refl(1, 10))
        mem = record_reflections(mem, _refl(2, 4))
        assert [r.source_episode for r in mem] == [2, 2, 2, 2]

    def test_no_eviction_within_budget(self):
        mem = record_reflections(record_reflections(LongTermMemory(), _refl(1, 8)), _refl(2, 4))
        assert len(mem) == 12

    def test_single_episode_overflow_keeps_newest(self):
        mem = record_reflections(LongTermMemory(budget=2), _refl(1, 3))
        assert [r.body for r in mem] == ["lesson 1.1", "lesson 1.2"]

    @settings(max_examples=200, deadline=None)
    @given(st.lists(st.integers(1, 6), min_size=1, max_size=8), st.integers(1, 12))
    def test_budget_and_episode_integrity(self, sizes, budget):
        mem = LongTermMemory(budget=budget)
        for ep, n in enumerate(sizes, start=1):
            mem = record_reflections(mem, _refl(ep, n))
            assert len(mem) <= budget
            kept = {r.source_episode for r in mem}
            # either a single (possibly clipped) episode, or only complete episodes survive
            if len(kept) > 1:
                for e in kept:
                    assert sum(r.source_episode == e for r in mem) == sizes[e - 1]
            assert ep in kept


class TestJsonl:
    @settings(max_examples=100, deadline=None)
    @given(valid_trajectories(), st.sampled_from(["success", "failure", "truncated"]))
    def test_round_trip(self, traj, outcome):
        ep = Episode("minihouse-003", traj, outcome, 1.0 if outcome == "success" else 0.0,
                     episode_index=2, task_type="cool", prompt_tokens=7, completion_tokens=3)
        text = episode_to_jsonl(ep)
        assert episodes_from_jsonl(text) == [ep]
        assert episode_to_jsonl(episodes_from_jsonl(text)[0]) == text

    def test_torn_episode_rejected(self):
        ep = Episode("s", build_trajectory([("g", ["a"], True)]), "failure", 0.0)
        lines = episode_to_jsonl(ep).splitlines(keepends=True)
        with pytest.raises(ValueError):
            episodes_from_jsonl("".join(lines[:-1]))

    def test_status_records_skipped(self):
        ep = Episode("s", build_trajectory([("g", ["a"], True)]), "failure", 0.0)
        text = episode_to_jsonl(ep) + '{"kind": "status", "scenario": "s", "status": "exhausted"}\n'
        assert episodes_from_jsonl(text) == [ep]
