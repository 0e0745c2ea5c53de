import math

import numpy as np
import pytest

from lmgame.corpus import PromptInstance
from lmgame.elicitation import (
    ELEVEN_POINT,
    FIVE_POINT,
    THREE_POINT,
    AllowedSet,
    ComparisonRound,
    Response,
    build_rounds,
    expected_reward,
    optimal_response,
    response_to_ratio,
    reward,
    round_probability,
)
from lmgame.predictors import LookupPredictor, point_mass


class TestAllowedSet:
    def test_presets_are_valid(self):
        assert len(ELEVEN_POINT.values) == 11
        assert len(FIVE_POINT.values) == 5
        assert len(THREE_POINT.values) == 3

    def test_must_contain_half(self):
        with pytest.raises(ValueError, match="0.5"):
            AllowedSet((0.2, 0.8))

    def test_must_be_symmetric(self):
        with pytest.raises(ValueError, match="symmetric"):
            AllowedSet((0.2, 0.5))

    def test_values_in_open_interval(self):
        with pytest.raises(ValueError, match="outside"):
            AllowedSet((0.0, 0.5, 1.0))

    def test_snap(self):
        assert ELEVEN_POINT.snap(0.1 + 1e-12) == 0.1
        with pytest.raises(ValueError):
            ELEVEN_POINT.snap(0.15)

    def test_contains(self):
        assert 0.5 in ELEVEN_POINT
        assert 0.15 not in ELEVEN_POINT


class TestReward:
    def test_half_scores_zero_always(self):
        for outcome in ("x", "y"):
            for g in (0.001, 0.3, 0.9):
                assert reward(0.5, outcome, g, 1 - g) == 0.0

    def test_correct_leaning_frozen_value(self):
        # 1000 * 0.5 * (ln 0.9 - ln 0.5) = 500 * ln 1.8, hand-derived
        assert reward(0.9, "x", 0.5, 0.25) == pytest.approx(293.8933324510595, abs=1e-9)

    def test_wrong_leaning_frozen_value(self):
        # 1000 * 0.5 * (ln 0.1 - ln 0.5) = 500 * ln 0.2, hand-derived
        assert reward(0.9, "y", 0.25, 0.5) == pytest.approx(-804.7189562170502, abs=1e-9)

    def test_plain_variant(self):
        assert reward(0.9, "x", 0.5, 0.5, variant="plain") == pytest.approx(
            0.5 * math.log(0.9)
        )
        assert reward(0.5, "x", 0.5, 0.5, variant="plain") != 0.0

    def test_degenerate_reports_rejected(self):
        for p in (0.0, 1.0, -0.1, 1.1):
            with pytest.raises(ValueError):
                reward(p, "x", 0.5, 0.5)

    def test_generator_probability_weights_scale_the_score(self):
        small = reward(0.9, "x", 0.1, 0.5)
        large = reward(0.9, "x", 0.8, 0.5)
        assert large == pytest.approx(8 * small)


class TestOptimalResponse:
    def test_symmetry(self):
        assert optimal_response(0.3, 0.3) == 0.5

    def test_direct_ratio(self):
        assert optimal_response(0.75, 0.25) == 0.75
        assert optimal_response(3e-4, 1e-4) == pytest.approx(0.75)

    def test_positivity_required(self):
        with pytest.raises(ValueError):
            optimal_response(0.0, 0.5)

    def test_grid_argmax_matches_closed_form(self):
        """Incentive compatibility: brute-force argmax of the expected reward
        lands on h_x/(h_x+h_y) regardless of the believed generator."""
        rng = np.random.default_rng(1234)
        grid = np.linspace(1e-4, 1 - 1e-4, 10_000)
        for _ in range(50):
            h_x, h_y = rng.uniform(0.01, 1.0, size=2)
            g_x_hat, g_y_hat = rng.uniform(0.01, 0.99, size=2)
            values = [expected_reward(p, h_x, h_y, g_x_hat, g_y_hat) for p in grid]
            best = grid[int(np.argmax(values))]
            assert abs(best - h_x / (h_x + h_y)) <= 1.5e-4


class TestRoundProbability:
    def test_nearest_value(self):
        assert round_probability(0.93, ELEVEN_POINT) == 0.9

    def test_fixed_point(self):
        assert round_probability(0.5, ELEVEN_POINT) == 0.5

    def test_midpoint_ties_toward_half(self):
        assert round_probability(0.55, ELEVEN_POINT) == 0.5
        assert round_probability(0.45, ELEVEN_POINT) == 0.5
        assert round_probability(0.65, FIVE_POINT) == 0.5

    def test_extremes(self):
        assert round_probability(0.999, ELEVEN_POINT) == 0.99
        assert round_probability(0.001, ELEVEN_POINT) == 0.01


def _prompt():
    return PromptInstance(context=(0, 1), true_next=1, origin=(0, 2))


class TestBuildRounds:
    def test_point_mass_generator_all_auto(self):
        gen = LookupPredictor(3, {(0, 1): point_mass(1, 3).probs})
        rounds = build_rounds(_prompt(), gen, n=8, rng=np.random.default_rng(0))
        assert len(rounds) == 1
        (r,) = rounds
        assert r.auto and r.multiplicity == 8 and r.sampled_candidate == 1

    def test_pigeonhole_on_tiny_vocab(self):
        gen = LookupPredictor(2, {(0, 1): [0.5, 0.5]})
        prompt = PromptInstance(context=(0, 1), true_next=1, origin=(0, 2))
        rounds = build_rounds(prompt, gen, n=10, rng=np.random.default_rng(0))
        assert len(rounds) <= 2
        assert sum(r.multiplicity for r in rounds) == 10

    def test_fixed_seed_identical_rounds(self, generator, val_split):
        from lmgame.corpus import sample_prompts

        prompt = sample_prompts(val_split, 1, 120, 3)[0]
        a = build_rounds(prompt, generator, 10, np.random.default_rng(5))
        b = build_rounds(prompt, generator, 10, np.random.default_rng(5))
        assert a == b

    def test_g_values_match_generator(self, generator, val_split):
        from lmgame.corpus import sample_prompts

        prompt = sample_prompts(val_split, 1, 120, 4)[0]
        dist = generator.distribution(prompt.context)
        for r in build_rounds(prompt, generator, 10, np.random.default_rng(0)):
            assert r.g_true == dist.prob(prompt.true_next)
            assert r.g_sampled == dist.prob(r.sampled_candidate)


def _round(true_first: bool, auto=False, sampled=2):
    return ComparisonRound(
        round_id="p0/0",
        prompt_id="p0",
        context=(0, 1, 2),
        true_candidate=1,
        sampled_candidate=1 if auto else sampled,
        g_true=0.4,
        g_sampled=0.4 if auto else 0.2,
        true_shown_first=true_first,
        multiplicity=3,
        auto=auto,
    )


class TestResponseToRatio:
    def test_auto_round_ratio_one(self):
        sample = response_to_ratio(
            Response("p0/0", 0.5, "h1", auto=True), _round(True, auto=True)
        )
        assert sample.r == 1.0 and sample.auto and sample.x == sample.y_true

    def test_half_means_ratio_one(self):
        sample = response_to_ratio(Response("p0/0", 0.5, "h1"), _round(True))
        assert sample.r == 1.0

    def test_orientation_true_first(self):
        # p(first=true)=0.8 -> sampled candidate holds 0.2 -> r = 0.25
        sample = response_to_ratio(Response("p0/0", 0.8, "h1"), _round(True))
        assert sample.r == pytest.approx(0.25)
        assert sample.x == 2 and sample.y_true == 1
        assert sample.g_x == 0.2 and sample.g_y == 0.4
        assert sample.weight == 3.0

    def test_orientation_sampled_first(self):
        # first displayed is the sample; p refers to it directly
        sample = response_to_ratio(Response("p0/0", 0.2, "h1"), _round(False))
        assert sample.r == pytest.approx(0.25)

    def test_blinding_invariance_exact_with_allowed_set(self):
        a = response_to_ratio(Response("p0/0", 0.8, "h1"), _round(True), ELEVEN_POINT)
        b = response_to_ratio(Response("p0/0", 0.2, "h1"), _round(False), ELEVEN_POINT)
        assert a == b

    def test_blinding_invariance_continuous(self):
        p = 0.7361
        a = response_to_ratio(Response("p0/0", p, "h1"), _round(True))
        b = response_to_ratio(Response("p0/0", 1 - p, "h1"), _round(False))
        assert a.r == pytest.approx(b.r, rel=1e-12)

    def test_round_id_mismatch_rejected(self):
        with pytest.raises(ValueError, match="p9/9"):
            response_to_ratio(Response("p9/9", 0.5, "h1"), _round(True))

    def test_not_in_allowed_set_rejected(self):
        with pytest.raises(ValueError, match="not in the allowed set"):
            response_to_ratio(Response("p0/0", 0.37, "h1"), _round(True), ELEVEN_POINT)

    def test_optimal_play_recovers_belief_ratio(self):
        """response_to_ratio composed with optimal play returns h(x)/h(y)."""
        h_x, h_y = 0.06, 0.18
        round_ = _round(False)
        p = optimal_response(h_x, h_y)  # for the first-displayed = sampled
        sample = response_to_ratio(Response("p0/0", p, "h1"), round_)
        assert sample.r == pytest.approx(h_x / h_y, rel=1e-12)

    def test_rounded_play_stays_within_bracket(self):
        h_x, h_y = 0.06, 0.18  # p* = 0.25, allowed neighbors 0.2 and 0.3
        p = round_probability(optimal_response(h_x, h_y), ELEVEN_POINT)
        assert p in (0.2, 0.3)
