"""The comparison game: round construction, the incentive-compatible reward,
rounding to checkbox probabilities, and conversion of answers to ratios.

A round shows a context and two candidate next tokens in blinded random
order: one is the true next token, the other was sampled from the reference
generator G. The participant reports p, the probability that the first
displayed candidate is the true one. The reward is a weighted binary
cross-entropy whose weights are the generator's probabilities of the two
candidates; its expectation is maximized by reporting h(first)/(h(first)+
h(second)) regardless of what the participant believes about G, which is
what makes the elicited ratios usable by the estimator.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
import numpy as np

from lmgame.corpus.splits import PromptInstance
from lmgame.predictors.base import Predictor
from lmgame.records import RatioSample


@dataclass(frozen=True)
class AllowedSet:
    """The checkbox probabilities a responder may answer with.

    Symmetric (p in the set implies 1-p is too) and always contains 0.5.
    """

    values: tuple[float, ...]

    def __post_init__(self):
        vals = tuple(sorted(self.values))
        object.__setattr__(self, "values", vals)
        if not vals:
            raise ValueError("allowed set is empty")
        for v in vals:
            if not 0.0 < v < 1.0:
                raise ValueError(f"allowed value {v} outside (0,1)")
            if not any(abs((1.0 - v) - w) < 1e-12 for w in vals):
                raise ValueError(f"allowed set not symmetric: missing complement of {v}")
        if not any(abs(v - 0.5) < 1e-12 for v in vals):
            raise ValueError("allowed set must contain 0.5")

    def snap(self, p: float, tol: float = 1e-9) -> float:
        """Return the canonical stored float matching p, or raise."""
        for v in self.values:
            if abs(v - p) <= tol:
                return v
        raise ValueError(f"{p} is not in the allowed set")

    def __contains__(self, p: float) -> bool:
        try:
            self.snap(p)
            return True
        except ValueError:
            return False


ELEVEN_POINT = AllowedSet((0.01, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.99))
FIVE_POINT = AllowedSet((0.1, 0.2, 0.5, 0.8, 0.9))
THREE_POINT = AllowedSet((0.2, 0.5, 0.8))

PRESETS: dict[str, AllowedSet | None] = {
    "eleven": ELEVEN_POINT,
    "five": FIVE_POINT,
    "three": THREE_POINT,
    "continuous": None,
}


@dataclass(frozen=True)
class ComparisonRound:
    """One comparison question, pre-generated and frozen.

    Duplicate generator draws are collapsed into a single asked round with a
    multiplicity; the answer is reused for each duplicate. Rounds where the
    sample equals the true token are auto-answered (both equally likely) and
    never shown.
    """

    round_id: str
    prompt_id: str
    context: tuple[int, ...]
    true_candidate: int
    sampled_candidate: int
    g_true: float
    g_sampled: float
    true_shown_first: bool
    multiplicity: int = 1
    auto: bool = False

    def __post_init__(self):
        if not (0 < self.g_true < 1 and 0 < self.g_sampled < 1):
            raise ValueError("generator probabilities must lie strictly inside (0,1)")
        if self.multiplicity < 1:
            raise ValueError("multiplicity must be >= 1")

    @property
    def first_candidate(self) -> int:
        return self.true_candidate if self.true_shown_first else self.sampled_candidate

    @property
    def second_candidate(self) -> int:
        return self.sampled_candidate if self.true_shown_first else self.true_candidate


@dataclass(frozen=True)
class Response:
    """A responder's answer: p is for the first-displayed candidate."""

    round_id: str
    p: float
    responder_id: str
    auto: bool = False
    timestamp: float = 0.0


def build_rounds(
    prompt: PromptInstance,
    generator: Predictor,
    n: int,
    rng: np.random.Generator,
    prompt_id: str = "p0",
) -> list[ComparisonRound]:
    """Draw n candidates from the generator and collapse them into asked rounds."""
    if n < 1:
        raise ValueError("n must be >= 1")
    dist = generator.distribution(prompt.context)
    draws = Counter(int(t) for t in dist.sample_many(rng, n))
    g_true = dist.prob(prompt.true_next)
    rounds = []
    for k, (token, mult) in enumerate(sorted(draws.items())):
        auto = token == prompt.true_next
        rounds.append(
            ComparisonRound(
                round_id=f"{prompt_id}/{k}",
                prompt_id=prompt_id,
                context=tuple(prompt.context),
                true_candidate=prompt.true_next,
                sampled_candidate=token,
                g_true=g_true,
                g_sampled=dist.prob(token),
                true_shown_first=auto or bool(rng.random() < 0.5),
                multiplicity=mult,
                auto=auto,
            )
        )
    return rounds


def reward(
    p: float,
    outcome: str,
    g_x: float,
    g_y: float,
    variant: str = "shifted",
    scale: float = 1000.0,
) -> float:
    """Score a report p that candidate x is true, given the true outcome.

    The "shifted" form is scale * g_z * (log(answer for z) - log(0.5)): zero
    at p = 0.5, positive for leaning the right way. The "plain" variant is
    the bare weighted cross-entropy g_x*log(p) / g_y*log(1-p); both are
    maximized in expectation by the same report.
    """
    if not 0.0 < p < 1.0:
        raise ValueError(f"p must be strictly inside (0,1), got {p}")
    if outcome not in ("x", "y"):
        raise ValueError(f"outcome must be 'x' or 'y', got {outcome!r}")
    if variant not in ("shifted", "plain"):
        raise ValueError(f"unknown reward variant {variant!r}")
    if outcome == "x":
        term = g_x * (math.log(p) - (math.log(0.5) if variant == "shifted" else 0.0))
    else:
        term = g_y * (math.log(1.0 - p) - (math.log(0.5) if variant == "shifted" else 0.0))
    return (scale if variant == "shifted" else 1.0) * term


def expected_reward(
    p: float, h_x: float, h_y: float, g_x_hat: float, g_y_hat: float
) -> float:
    """Expected reward for a responder with belief h who thinks G is g_hat.

    Up to normalization of the subjective outcome probabilities; the argmax
    over p is h_x/(h_x+h_y) for every g_hat, which is the point.
    """
    return g_x_hat * math.log(p) * (h_x * g_y_hat) + g_y_hat * math.log(1.0 - p) * (
        h_y * g_x_hat
    )


def optimal_response(h_x: float, h_y: float) -> float:
    """The expected-reward-maximizing report for a responder with belief h."""
    if h_x <= 0 or h_y <= 0:
        raise ValueError("belief probabilities must be positive")
    return h_x / (h_x + h_y)


def round_probability(p: float, allowed: AllowedSet) -> float:
    """Nearest allowed value; exact midpoint ties go toward 0.5."""
    if not 0.0 < p < 1.0:
        raise ValueError(f"p must be strictly inside (0,1), got {p}")
    dists = [abs(v - p) for v in allowed.values]
    best = min(dists)
    candidates = [v for v, d in zip(allowed.values, dists) if d <= best + 1e-12]
    return min(candidates, key=lambda v: abs(v - 0.5))


def response_to_ratio(
    response: Response,
    round_: ComparisonRound,
    allowed: AllowedSet | None = None,
) -> RatioSample:
    """Undo the display blinding and orient the ratio as r(sampled, true).

    With an allowed set, p and its complement snap to the canonical stored
    floats so that swapping the display order and complementing p yields a
    bit-identical sample.
    """
    if response.round_id != round_.round_id:
        raise ValueError(
            f"response for round {response.round_id!r} applied to {round_.round_id!r}"
        )
    if round_.auto:
        r = 1.0
    else:
        p = allowed.snap(response.p) if allowed is not None else response.p
        if not 0.0 < p < 1.0:
            raise ValueError(f"response probability {p} outside (0,1)")
        p_sampled = (1.0 - p) if round_.true_shown_first else p
        if allowed is not None:
            p_sampled = allowed.snap(p_sampled)
        r = p_sampled / (1.0 - p_sampled)
    return RatioSample(
        x=round_.sampled_candidate,
        y_true=round_.true_candidate,
        r=r,
        g_x=round_.g_sampled,
        g_y=round_.g_true,
        weight=float(round_.multiplicity),
        auto=round_.auto,
        prompt_id=round_.prompt_id,
        round_id=round_.round_id,
        responder_id=response.responder_id,
        context_len=len(round_.context),
    )
