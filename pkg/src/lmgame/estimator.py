"""Loss and perplexity computation.

Direct losses come from a predictor's own probabilities. For responders that
cannot produce a full distribution (humans), the loss gap against a reference
generator G is estimated from elicited probability ratios:

    per prompt:   h(y|c)/g(y|c)  ~  ( (1/n) * sum_x (g(y|c)/g(x|c)) r(x,y|c) )^-1
    across prompts:   L_h - L_G  ~  mean log of the inner averages

Adding the generator's known loss gives the responder's loss and perplexity.
Losses are in nats with perplexity = exp(loss); a bit-denominated view is a
pure display transform.

The inner term is computed as r / (g_x/g_y): when the responder's ratio was
produced by the very same division of the very same generator floats
(self-estimation), every term is exactly 1.0 and the estimated gap is exactly
zero, with no sampling noise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from lmgame.corpus.splits import PromptInstance
from lmgame.elicitation import (
    AllowedSet,
    ComparisonRound,
    Response,
    optimal_response,
    round_probability,
)
from lmgame.predictors.base import Predictor
from lmgame.records import RatioSample


@dataclass(frozen=True)
class PromptEstimate:
    """The per-prompt building block of the loss-gap estimate."""

    prompt_id: str
    h_over_g: float
    log_term: float
    n_effective: int


@dataclass(frozen=True)
class LossReport:
    """Loss, perplexity, and uncertainty for one predictor on one prompt set."""

    loss_gap: float
    generator_loss: float
    loss: float
    perplexity: float
    sigma: float
    lower: float
    upper: float
    N: int
    display_name: str = ""

    def to_dict(self) -> dict:
        return {
            "display_name": self.display_name,
            "loss_gap_nats": self.loss_gap,
            "generator_loss_nats": self.generator_loss,
            "loss_nats": self.loss,
            "perplexity": self.perplexity,
            "sigma_nats": self.sigma,
            "perplexity_lower": self.lower,
            "perplexity_upper": self.upper,
            "prompts": self.N,
        }

    def to_bits_dict(self) -> dict:
        """Display transform to base-2 losses; perplexity is base-invariant."""
        ln2 = math.log(2.0)
        d = self.to_dict()
        d.update(
            {
                "loss_gap_bits": self.loss_gap / ln2,
                "generator_loss_bits": self.generator_loss / ln2,
                "loss_bits": self.loss / ln2,
                "sigma_bits": self.sigma / ln2,
            }
        )
        return d


@dataclass(frozen=True)
class BootstrapReport:
    iterations: int
    median: float
    q05: float
    q95: float
    seed: int

    def to_dict(self) -> dict:
        return {
            "iterations": self.iterations,
            "perplexity_median": self.median,
            "perplexity_q05": self.q05,
            "perplexity_q95": self.q95,
            "seed": self.seed,
        }


def uncertainty_bounds(per_prompt_values: Sequence[float]) -> tuple[float, float, float]:
    """Standard error of the mean loss and the exp(L +/- 2*sigma) bounds."""
    values = np.asarray(per_prompt_values, dtype=np.float64)
    n = len(values)
    if n < 2:
        raise ValueError("need at least 2 per-prompt values for uncertainty")
    mean = float(values.mean())
    sigma = float(values.std(ddof=1) / math.sqrt(n))
    return sigma, math.exp(mean - 2.0 * sigma), math.exp(mean + 2.0 * sigma)


def _report_from_values(
    values: np.ndarray, loss: float, gap: float, generator_loss: float, name: str
) -> LossReport:
    perplexity = math.exp(loss)
    if len(values) >= 2:
        sigma, lower, upper = uncertainty_bounds(values)
        # Bounds are centered on the pipeline's own loss; with per-prompt
        # values whose mean equals it, this is identical to uncertainty_bounds.
        lower = math.exp(loss - 2.0 * sigma)
        upper = math.exp(loss + 2.0 * sigma)
    else:
        sigma, lower, upper = 0.0, perplexity, perplexity
    return LossReport(
        loss_gap=gap,
        generator_loss=generator_loss,
        loss=loss,
        perplexity=perplexity,
        sigma=sigma,
        lower=lower,
        upper=upper,
        N=len(values),
        display_name=name,
    )


def per_prompt_losses(predictor: Predictor, prompts: Sequence[PromptInstance]) -> np.ndarray:
    return np.array(
        [-math.log(predictor.distribution(p.context).prob(p.true_next)) for p in prompts]
    )


def direct_loss(predictor: Predictor, prompts: Sequence[PromptInstance]) -> LossReport:
    """Mean negative log probability of the true next tokens, in nats."""
    if not prompts:
        raise ValueError("prompts must be non-empty")
    values = per_prompt_losses(predictor, prompts)
    loss = float(values.mean())
    return _report_from_values(
        values, loss, gap=0.0, generator_loss=loss, name=predictor.display_name
    )


def estimate_h_over_g(samples: Sequence[RatioSample]) -> PromptEstimate:
    """Invert the weighted mean of (g_y/g_x) * r over one prompt's samples."""
    if not samples:
        raise ValueError("no ratio samples for prompt")
    y = samples[0].y_true
    pid = samples[0].prompt_id
    num = 0.0
    den = 0.0
    for s in samples:
        if s.y_true != y:
            raise ValueError(f"samples mix true tokens {y} and {s.y_true}")
        num += s.weight * (s.r / (s.g_x / s.g_y))
        den += s.weight
    mean = num / den
    weights = [s.weight for s in samples]
    whole = all(w == int(w) for w in weights)
    return PromptEstimate(
        prompt_id=pid,
        h_over_g=den / num,
        log_term=math.log(mean),
        n_effective=int(round(den)) if whole else len(samples),
    )


def estimate_loss_gap(
    estimates: Sequence[PromptEstimate],
    generator_loss: float,
    per_prompt_generator_losses: Mapping[str, float] | None = None,
    display_name: str = "",
) -> LossReport:
    """Fold per-prompt estimates into a loss report.

    When per-prompt generator losses are supplied (keyed by prompt id), the
    uncertainty is computed over per-prompt target losses; otherwise over the
    log terms alone, i.e. treating the generator loss as exact.
    """
    if not estimates:
        raise ValueError("no prompt estimates")
    ordered = sorted(estimates, key=lambda e: e.prompt_id)
    log_terms = np.array([e.log_term for e in ordered])
    gap = float(log_terms.mean())
    loss = generator_loss + gap
    if per_prompt_generator_losses is not None:
        values = np.array(
            [per_prompt_generator_losses[e.prompt_id] + e.log_term for e in ordered]
        )
    else:
        values = generator_loss + log_terms
    return _report_from_values(values, loss, gap, generator_loss, display_name)


def group_by_prompt(samples: Iterable[RatioSample]) -> dict[str, list[RatioSample]]:
    groups: dict[str, list[RatioSample]] = {}
    for s in samples:
        groups.setdefault(s.prompt_id, []).append(s)
    return groups


def generator_losses_from_records(samples: Iterable[RatioSample]) -> dict[str, float]:
    """Per-prompt generator losses recovered from the records' own g_y values."""
    losses: dict[str, float] = {}
    for s in samples:
        losses.setdefault(s.prompt_id, -math.log(s.g_y))
    return losses


def estimate_from_records(
    samples: Sequence[RatioSample], display_name: str = ""
) -> LossReport:
    """The full pipeline over exported records, self-contained.

    Every record carries g(y|c), so the generator's loss on the same prompts
    is recovered from the records themselves.
    """
    groups = group_by_prompt(samples)
    if not groups:
        raise ValueError("no ratio samples")
    g_losses = generator_losses_from_records(samples)
    ordered = sorted(groups)
    generator_loss = float(np.mean([g_losses[pid] for pid in ordered]))
    estimates = [estimate_h_over_g(groups[pid]) for pid in ordered]
    return estimate_loss_gap(estimates, generator_loss, g_losses, display_name)


def bootstrap_over_users(
    samples: Sequence[RatioSample],
    iterations: int = 100,
    seed: int = 0,
) -> BootstrapReport:
    """Re-estimate with a random half of responders dropped, many times.

    Deterministic given the seed. Reports the median and the 0.05/0.95
    quantiles of the per-iteration perplexities.
    """
    responders = sorted({s.responder_id for s in samples})
    if len(responders) < 2:
        raise ValueError("bootstrap needs at least 2 responders")
    rng = np.random.default_rng(seed)
    perplexities = []
    for _ in range(iterations):
        dropped = set(rng.choice(responders, size=len(responders) // 2, replace=False))
        kept = [s for s in samples if s.responder_id not in dropped]
        perplexities.append(estimate_from_records(kept).perplexity)
    q05, median, q95 = np.quantile(perplexities, [0.05, 0.5, 0.95])
    return BootstrapReport(
        iterations=iterations,
        median=float(median),
        q05=float(q05),
        q95=float(q95),
        seed=seed,
    )


def rounded_model_responder(
    model: Predictor,
    allowed: AllowedSet | None,
    responder_id: str | None = None,
) -> Callable[[ComparisonRound], Response]:
    """A responder that plays optimally for its model, then rounds to the
    allowed checkboxes.

    Only the elicited comparison ratios are rounded; the model's probability
    of the correct token itself is never rounded, so the resulting estimate
    is not the true perplexity of any "rounded model".
    """
    rid = responder_id or f"rounded:{model.display_name}"

    def respond(round_: ComparisonRound) -> Response:
        if round_.auto:
            return Response(round_id=round_.round_id, p=0.5, responder_id=rid, auto=True)
        dist = model.distribution(round_.context)
        p = optimal_response(dist.prob(round_.first_candidate), dist.prob(round_.second_candidate))
        if allowed is not None:
            p = round_probability(p, allowed)
        return Response(round_id=round_.round_id, p=p, responder_id=rid)

    return respond
