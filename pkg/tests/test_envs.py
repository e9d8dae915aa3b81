from __future__ import annotations

import random
from dataclasses import replace
from collections import Counter

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hicrl.envs import ENV_IDS, bundled_scenarios, get_scenario, make_env, minishop_score, miniwiki_normalize
from hicrl.envs import minihouse, minishop, miniwiki
from hicrl.envs.base import NOTHING, normalize_command
from hicrl.errors import AlreadyDone, BadSeed, NotReset, UnknownEnv
from helpers import cool_mug_scenario


def _play(scenario, actions):
    env = make_env(scenario.env_id)
    obs = [env.reset(scenario)]
    results = [env.step(a) for a in actions]
    return env, obs + [r.observation for r in results], results


class TestReset:
    def test_house_deterministic(self):
        sc = get_scenario("minihouse", 7)
        assert make_env("minihouse").reset(sc) == make_env("minihouse").reset(sc)
        assert minihouse.generate(7) == minihouse.generate(7)

    def test_shop_usage_hint(self):
        assert "search[" in make_env("minishop").reset(get_scenario("minishop", 5))

    def test_wiki_question_verbatim(self):
        sc = get_scenario("miniwiki", 3)
        assert make_env("miniwiki").reset(sc) == sc.task_text
        assert sc.task_text.endswith("?")

    def test_wrong_env(self):
        with pytest.raises(UnknownEnv):
            make_env("minishop").reset(get_scenario("miniwiki", 0))

    def test_reset_clears_state(self):
        sc = get_scenario("minihouse", 1)
        env, _, _ = _play(sc, sc.oracle_actions[:2])
        env.reset(sc)
        fresh = make_env("minihouse")
        fresh.reset(sc)
        assert env.snapshot() == fresh.snapshot()


class TestErrors:
    def test_unknown_env(self):
        with pytest.raises(UnknownEnv):
            make_env("minigolf")
        with pytest.raises(UnknownEnv):
            bundled_scenarios("minigolf")

    def test_bad_seed(self):
        with pytest.raises(BadSeed):
            get_scenario("miniwiki", 999)
        with pytest.raises(BadSeed):
            miniwiki.generate(-1)

    def test_step_before_reset(self):
        with pytest.raises(NotReset):
            make_env("minihouse").step("look")

    def test_step_after_done(self):
        sc = get_scenario("miniwiki", 0)
        env, _, results = _play(sc, ["finish[nobody]"])
        assert results[-1].done
        with pytest.raises(AlreadyDone):
            env.step("search[Tollen]")


class TestHouse:
    def test_cool_mug(self):
        sc = cool_mug_scenario()
        env, obs, results = _play(sc, sc.oracle_actions[:4])
        assert obs[-1] == "You cool the mug 1 using the fridge 1."
        assert "cool" in env.state["objects"]["mug 1"]["attrs"]
        assert not results[-1].done

    def test_cool_mug_solved(self):
        sc = cool_mug_scenario()
        _, _, results = _play(sc, sc.oracle_actions)
        assert results[-1].won
        assert all(not r.done for r in results[:-1])

    def test_uncooled_mug_does_not_count(self):
        sc = cool_mug_scenario()
        actions = ["go to countertop 1", "take mug 1 from countertop 1", "go to cabinet 1", "open cabinet 1",
                   "put mug 1 in/on cabinet 1"]
        _, _, results = _play(sc, actions)
        assert not results[-1].done
        assert results[-1].observation == "You put the mug 1 in/on the cabinet 1."

    def test_at_least_three_per_type(self):
        counts = Counter(sc.task_type for sc in bundled_scenarios("minihouse"))
        assert set(counts) == set(minihouse.TASK_TYPES)
        assert min(counts.values()) >= 3

    def test_pack_matches_generator(self):
        for sc in bundled_scenarios("minihouse"):
            assert minihouse.generate(sc.seed) == sc
            assert minihouse.generate(sc.seed).world == sc.world


_HOUSE_ACTIONS = [
    "go to countertop 1", "go to fridge 1", "open fridge 1", "close fridge 1", "take mug 1 from countertop 1",
    "take apple 1 from fridge 1", "put mug 1 in/on fridge 1", "cool mug 1 with fridge 1", "use desklamp 1",
    "go to cabinet 1", "open cabinet 1", "examine mug 1", "dance", "go to moon 1", "heat mug 1 with fridge 1",
]


class TestNothingHappens:
    @settings(max_examples=100, deadline=None)
    @given(st.integers(0, 23), st.lists(st.sampled_from(_HOUSE_ACTIONS), max_size=25))
    def test_house_state_untouched(self, seed, actions):
        sc = get_scenario("minihouse", seed)
        env = make_env("minihouse")
        env.reset(sc)
        for a in actions:
            if env.done:
                break
            before = env.snapshot()
            result = env.step(a)
            if result.observation == NOTHING:
                assert env.snapshot() == before

    @pytest.mark.parametrize("env_id, action", [
        ("minishop", "click[Buy Now]"), ("minishop", "dance"), ("minishop", "search[]"),
        ("miniwiki", "lookup[river]"), ("miniwiki", "walk[north]"), ("miniwiki", "search[]"),
    ])
    def test_shop_wiki_invalid(self, env_id, action):
        sc = bundled_scenarios(env_id)[0]
        env = make_env(env_id)
        env.reset(sc)
        before = env.snapshot()
        result = env.step(action)
        assert result.observation == NOTHING and env.snapshot() == before and not result.done


class TestShop:
    def test_score_examples(self):
        item = {"category": "jacket", "attributes": ["denim", "waterproof"], "price": 40.0}
        gold = {"category": "jacket", "attributes": ["denim"], "options": {"size": "m"}, "price_max": 50.0}
        assert minishop_score(item, {"size": "m"}, gold) == 1.0
        assert minishop_score(item, {"size": "l"}, gold) == 0.75

    def test_scenario_two_satisfiable(self):
        sc = get_scenario("minishop", 2)
        assert minishop.best_score(sc.world["catalog"], sc.gold) == 1.0

    def test_unique_satisfying_item(self):
        for sc in bundled_scenarios("minishop"):
            matches = [it for it in sc.world["catalog"] if minishop.satisfies(it, sc.gold)]
            assert len(matches) == 1

    def test_buy_now_scores(self):
        sc = get_scenario("minishop", 2)
        _, _, results = _play(sc, sc.oracle_actions)
        assert results[-1].reward == 1.0 and results[-1].done

    def test_partial_purchase(self):
        sc = get_scenario("minishop", 2)
        without_options = sc.oracle[0]["actions"] + sc.oracle[1]["actions"][:1] + ["click[Buy Now]"]
        _, _, results = _play(sc, without_options)
        assert results[-1].done and 0.0 < results[-1].reward < 1.0

    def test_pack_matches_generator(self):
        catalog = minishop.build_catalog()
        for sc in bundled_scenarios("minishop"):
            assert minishop.generate(sc.seed, catalog) == sc


class TestWiki:
    @pytest.mark.parametrize("text, expected", [
        ("The Beatles!", "beatles"), ("  42 ", "42"), ("an apple-pie", "apple pie"),
    ])
    def test_normalize(self, text, expected):
        assert miniwiki_normalize(text) == expected

    def test_finish_normalized(self):
        sc = get_scenario("miniwiki", 0)
        beatles = replace(sc, gold={"answer": "the beatles"})
        _, _, results = _play(beatles, ["finish[The Beatles]"])
        assert results[-1].won

    def test_search_and_lookup(self):
        sc = get_scenario("miniwiki", 0)
        _, obs, _ = _play(sc, ["search[marrow bridge]", "lookup[designed]", "lookup[designed]", "lookup[designed]",
                               "search[Marow Bridge]"])
        assert obs[1].startswith("The Marrow Bridge")
        assert obs[2].startswith("(Result 1 / ")
        assert "No more results." in obs[2:4] or obs[3].startswith("(Result 2")
        assert obs[5].startswith("Could not find [Marow Bridge]. Similar: [")

    def test_lookup_cycle(self):
        sc = get_scenario("miniwiki", 0)
        env = make_env("miniwiki")
        env.reset(sc)
        env.step("search[Marrow Bridge]")
        seen = []
        for _ in range(8):
            seen.append(env.step("lookup[the]").observation)
        n = int(seen[0].split(" / ")[1].split(")")[0])
        assert seen[n] == "No more results."
        assert seen[n + 1] == seen[0]

    def test_types(self):
        counts = Counter(sc.task_type for sc in bundled_scenarios("miniwiki"))
        assert counts == {"bridge": 14, "comparison": 6}

    def test_answers_in_corpus(self):
        from hicrl.envs.wiki_corpus import ARTICLES
        text = " ".join(ARTICLES.values())
        for sc in bundled_scenarios("miniwiki"):
            assert sc.gold["answer"] in text or sc.gold["answer"] in ARTICLES


class TestDeterminism:
    @settings(max_examples=30, deadline=None)
    @given(st.sampled_from(ENV_IDS), st.integers(0, 19), st.integers(0, 10**6))
    def test_same_actions_same_observations(self, env_id, idx, action_seed):
        sc = bundled_scenarios(env_id)[idx]
        rng = random.Random(action_seed)
        pool = sc.oracle_actions + ["look", "click[Next >]", "lookup[the]", "go to desk 1"]
        actions = [rng.choice(pool) for _ in range(10)]

        def stream():
            env = make_env(env_id)
            out = [env.reset(sc)]
            for a in actions:
                if env.done:
                    break
                out.append(env.step(a).observation)
            return out

        assert stream() == stream()


def test_normalize_command():
    assert normalize_command("  go   to desk 1. ") == "go to desk 1"
    assert normalize_command("finish[Mr. Smith.]") == "finish[Mr. Smith.]"


@pytest.mark.parametrize("env_id", ENV_IDS)
def test_bundled_oracles_win(env_id):
    for sc in bundled_scenarios(env_id):
        _, obs, results = _play(sc, sc.oracle_actions)
        assert results[-1].won, sc.scenario_id
        assert not any(o == NOTHING for o in obs)
