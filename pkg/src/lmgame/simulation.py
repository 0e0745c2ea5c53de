"""Simulated responders and desk-scale experiments that validate the estimator.

Humans are replaced by participants whose belief is a predictor. Optimal
participants report h(first)/(h(first)+h(second)); naive-rational ones apply
the posterior that accounts for how the candidates were generated, which
demonstrates the bias the weighted reward removes. Experiments run the full
build-rounds -> respond -> ratios -> estimate pipeline and compare against
the target's directly computed loss.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

import numpy as np

from lmgame.corpus.filters import is_visually_empty, is_word_token
from lmgame.corpus.splits import CorpusSplit, PromptInstance, sample_prompts
from lmgame.corpus.vocab import Vocab
from lmgame.elicitation import (
    AllowedSet,
    ComparisonRound,
    Response,
    build_rounds,
    optimal_response,
    response_to_ratio,
    round_probability,
)
from lmgame.estimator import (
    LossReport,
    direct_loss,
    estimate_from_records,
    estimate_h_over_g,
    estimate_loss_gap,
    group_by_prompt,
    per_prompt_losses,
)
from lmgame.predictors.base import Predictor, predict_top1
from lmgame.records import RatioSample


@dataclass(frozen=True)
class SimulatedParticipant:
    """A stand-in responder whose belief about next tokens is a predictor.

    behavior "optimal" plays the reward-maximizing report and ignores
    believed_generator; "naive_rational" answers with the sampling-aware
    posterior, using believed_generator as its model of G. noise_sigma adds
    logit-space Gaussian jitter to the report (off by default).
    """

    belief: Predictor
    allowed: AllowedSet | None = None
    behavior: str = "optimal"
    believed_generator: Predictor | None = None
    responder_id: str = "sim"
    noise_sigma: float = 0.0

    def __post_init__(self):
        if self.behavior not in ("optimal", "naive_rational"):
            raise ValueError(f"unknown behavior {self.behavior!r}")
        if self.behavior == "naive_rational" and self.believed_generator is None:
            raise ValueError("naive_rational needs a believed_generator")


def _jitter(p: float, sigma: float, rng: np.random.Generator) -> float:
    p = min(max(p, 1e-9), 1.0 - 1e-9)
    z = math.log(p / (1.0 - p)) + sigma * rng.standard_normal()
    return 1.0 / (1.0 + math.exp(-z))


def respond(
    participant: SimulatedParticipant,
    round_: ComparisonRound,
    rng: np.random.Generator | None = None,
) -> Response:
    """Answer one comparison round (auto rounds answer themselves at 0.5)."""
    if round_.auto:
        return Response(
            round_id=round_.round_id, p=0.5, responder_id=participant.responder_id, auto=True
        )
    h = participant.belief.distribution(round_.context)
    h_first = h.prob(round_.first_candidate)
    h_second = h.prob(round_.second_candidate)
    if participant.behavior == "optimal":
        p = optimal_response(h_first, h_second)
    else:
        g_hat = participant.believed_generator.distribution(round_.context)
        gh_first = g_hat.prob(round_.first_candidate)
        gh_second = g_hat.prob(round_.second_candidate)
        p = (h_first * gh_second) / (h_second * gh_first + h_first * gh_second)
    if participant.noise_sigma > 0.0:
        if rng is None:
            raise ValueError("noise_sigma > 0 requires an rng")
        p = _jitter(p, participant.noise_sigma, rng)
    if participant.allowed is not None:
        p = round_probability(p, participant.allowed)
    return Response(round_id=round_.round_id, p=p, responder_id=participant.responder_id)


def _is_exact_optimal(participant: SimulatedParticipant) -> bool:
    return (
        participant.behavior == "optimal"
        and participant.allowed is None
        and participant.noise_sigma == 0.0
    )


def answer_round(
    participant: SimulatedParticipant,
    round_: ComparisonRound,
    rng: np.random.Generator | None = None,
) -> RatioSample:
    """One round to one ratio sample.

    Continuous optimal play shortcuts to r = h(x)/h(y) in a single float
    division; going through p and back loses ulps, and self-estimation must
    come out exactly zero. All other behaviors use the same p-based path a
    human response takes.
    """
    if not round_.auto and _is_exact_optimal(participant):
        h = participant.belief.distribution(round_.context)
        r = h.prob(round_.sampled_candidate) / h.prob(round_.true_candidate)
        return RatioSample(
            x=round_.sampled_candidate,
            y_true=round_.true_candidate,
            r=r,
            g_x=round_.g_sampled,
            g_y=round_.g_true,
            weight=float(round_.multiplicity),
            auto=False,
            prompt_id=round_.prompt_id,
            round_id=round_.round_id,
            responder_id=participant.responder_id,
            context_len=len(round_.context),
        )
    resp = respond(participant, round_, rng)
    return response_to_ratio(resp, round_, allowed=participant.allowed)


def exhaustive_rounds(
    prompt: PromptInstance, generator: Predictor, prompt_id: str
) -> list[ComparisonRound]:
    """Every vocabulary token as a candidate, weighted later by g(x|c).

    Impossible to ask of humans; exists so exactness can be tested and the
    Monte-Carlo estimator has a zero-variance reference limit.
    """
    dist = generator.distribution(prompt.context)
    g_true = dist.prob(prompt.true_next)
    rounds = []
    for x in range(len(dist)):
        rounds.append(
            ComparisonRound(
                round_id=f"{prompt_id}/{x}",
                prompt_id=prompt_id,
                context=tuple(prompt.context),
                true_candidate=prompt.true_next,
                sampled_candidate=x,
                g_true=g_true,
                g_sampled=dist.prob(x),
                true_shown_first=True,
                multiplicity=1,
                auto=x == prompt.true_next,
            )
        )
    return rounds


def _exhaustive_samples(
    prompt: PromptInstance,
    generator: Predictor,
    participant: SimulatedParticipant,
    prompt_id: str,
    rng: np.random.Generator | None,
) -> list[RatioSample]:
    g = generator.distribution(prompt.context)
    samples = []
    for round_ in exhaustive_rounds(prompt, generator, prompt_id):
        sample = answer_round(participant, round_, rng)
        samples.append(replace(sample, weight=g.prob(round_.sampled_candidate)))
    return samples


def prompt_id_for(index: int) -> str:
    return f"p{index:05d}"


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything an estimation experiment depends on besides the models."""

    N: int = 120
    n: int = 10
    seed: int = 0
    allowed: AllowedSet | None = None
    mode: str = "monte_carlo"
    behavior: str = "optimal"
    noise_sigma: float = 0.0
    max_context: int = 120

    def __post_init__(self):
        if self.N < 1 or self.n < 1:
            raise ValueError("N and n must be >= 1")
        if self.mode not in ("monte_carlo", "exhaustive"):
            raise ValueError(f"unknown mode {self.mode!r}")


@dataclass(frozen=True)
class ExperimentResult:
    estimated: LossReport
    truth: LossReport
    generator_report: LossReport
    records: list[RatioSample] = field(repr=False)
    prompts: list[PromptInstance] = field(repr=False)

    @property
    def bias(self) -> float:
        return self.estimated.loss - self.truth.loss


def simulate_records(
    config: ExperimentConfig,
    split: CorpusSplit,
    generator: Predictor,
    participants: Sequence[SimulatedParticipant],
    prompts: Sequence[PromptInstance] | None = None,
) -> tuple[list[PromptInstance], list[RatioSample]]:
    """Build one frozen question set and have every participant answer it."""
    if prompts is None:
        prompts = sample_prompts(split, config.N, config.max_context, config.seed)
    rng = np.random.default_rng(config.seed)
    records: list[RatioSample] = []
    for i, prompt in enumerate(prompts):
        pid = prompt_id_for(i)
        if config.mode == "exhaustive":
            for participant in participants:
                records.extend(
                    _exhaustive_samples(prompt, generator, participant, pid, rng)
                )
        else:
            rounds = build_rounds(prompt, generator, config.n, rng, prompt_id=pid)
            for participant in participants:
                for round_ in rounds:
                    records.append(answer_round(participant, round_, rng))
    return list(prompts), records


def run_estimation_experiment(
    config: ExperimentConfig,
    split: CorpusSplit,
    generator: Predictor,
    target: Predictor,
) -> ExperimentResult:
    """End-to-end: prompts, rounds, simulated responses, estimate, and truth."""
    participant = SimulatedParticipant(
        belief=target,
        allowed=config.allowed,
        behavior=config.behavior,
        believed_generator=generator if config.behavior == "naive_rational" else None,
        responder_id=f"sim:{target.display_name}",
        noise_sigma=config.noise_sigma,
    )
    prompts, records = simulate_records(config, split, generator, [participant])
    g_values = per_prompt_losses(generator, prompts)
    g_losses = {prompt_id_for(i): float(v) for i, v in enumerate(g_values)}
    groups = group_by_prompt(records)
    estimates = [estimate_h_over_g(groups[pid]) for pid in sorted(groups)]
    generator_report = direct_loss(generator, prompts)
    estimated = estimate_loss_gap(
        estimates, generator_report.loss, g_losses, display_name=target.display_name
    )
    truth = direct_loss(target, prompts)
    return ExperimentResult(
        estimated=estimated,
        truth=truth,
        generator_report=generator_report,
        records=records,
        prompts=list(prompts),
    )


def bias_curve(
    config: ExperimentConfig,
    split: CorpusSplit,
    generator: Predictor,
    target: Predictor,
    n_values: Sequence[int],
    seeds: Sequence[int] = tuple(range(10)),
) -> list[dict]:
    """Mean and spread of (estimated - true) loss per candidate count n."""
    if not n_values:
        raise ValueError("n_values must be non-empty")
    rows = []
    for n in n_values:
        biases = []
        for seed in seeds:
            result = run_estimation_experiment(
                replace(config, n=n, seed=seed), split, generator, target
            )
            biases.append(result.bias)
        arr = np.array(biases)
        rows.append(
            {
                "n": int(n),
                "mean_bias_nats": float(arr.mean()),
                "sd_bias_nats": float(arr.std(ddof=1)) if len(arr) > 1 else 0.0,
                "biases": [float(b) for b in arr],
            }
        )
    return rows


TOP1_FILTERS = ("none", "exclude_visually_empty", "word_tokens_only")


@dataclass(frozen=True)
class Top1Report:
    accuracy: float
    correct: int
    n_used: int
    n_excluded: int
    two_se: float

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "correct": self.correct,
            "prompts_used": self.n_used,
            "prompts_excluded": self.n_excluded,
            "accuracy_2se": self.two_se,
        }


def filter_prompts(
    prompts: Sequence[PromptInstance], vocab: Vocab, which: str
) -> tuple[list[PromptInstance], int]:
    """Apply one of the top-1 filters; returns (kept, excluded_count)."""
    if which not in TOP1_FILTERS:
        raise ValueError(f"unknown filter {which!r} (expected one of {TOP1_FILTERS})")
    if which == "none":
        return list(prompts), 0
    if which == "exclude_visually_empty":
        kept = [p for p in prompts if not is_visually_empty(p.true_next, vocab)]
    else:
        kept = [
            p
            for p in prompts
            if p.next_after is not None and is_word_token(p.true_next, p.next_after, vocab)
        ]
    return kept, len(prompts) - len(kept)


def top1_accuracy(
    predictor: Predictor,
    prompts: Sequence[PromptInstance],
    vocab: Vocab,
    which_filter: str = "none",
) -> Top1Report:
    kept, excluded = filter_prompts(prompts, vocab, which_filter)
    if not kept:
        raise ValueError(f"filter {which_filter!r} removed every prompt")
    hits = np.array(
        [1.0 if predict_top1(predictor, p.context) == p.true_next else 0.0 for p in kept]
    )
    two_se = (
        2.0 * float(hits.std(ddof=1)) / math.sqrt(len(hits)) if len(hits) > 1 else 0.0
    )
    return Top1Report(
        accuracy=float(hits.mean()),
        correct=int(hits.sum()),
        n_used=len(kept),
        n_excluded=excluded,
        two_se=two_se,
    )


def split_comparison(
    predictor: Predictor,
    train_prompts: Sequence[PromptInstance],
    val_prompts: Sequence[PromptInstance],
    vocab: Vocab,
) -> dict:
    """Loss, perplexity, and accuracy per split with 2-standard-error bars."""
    out = {}
    for name, prompts in (("train", train_prompts), ("validation", val_prompts)):
        if not prompts:
            raise ValueError(f"{name} prompts are empty")
        report = direct_loss(predictor, prompts)
        acc = top1_accuracy(predictor, prompts, vocab, "none")
        out[name] = {
            "loss_nats": report.loss,
            "loss_2se_nats": 2.0 * report.sigma,
            "perplexity": report.perplexity,
            "perplexity_lower": report.lower,
            "perplexity_upper": report.upper,
            "accuracy": acc.accuracy,
            "accuracy_2se": acc.two_se,
            "prompts": report.N,
        }
    return out


def rounding_sweep(
    config: ExperimentConfig,
    split: CorpusSplit,
    generator: Predictor,
    target: Predictor,
    presets: Mapping[str, AllowedSet | None],
) -> dict[str, LossReport]:
    """One estimation run per allowed-set preset with shared seeds."""
    if not presets:
        raise ValueError("presets must be non-empty")
    reports = {}
    for name, allowed in presets.items():
        result = run_estimation_experiment(
            replace(config, allowed=allowed), split, generator, target
        )
        reports[name] = result.estimated
    return reports


def word_token_subset_report(
    records: Sequence[RatioSample],
    prompts: Sequence[PromptInstance],
    vocab: Vocab,
) -> tuple[LossReport, int, int]:
    """Re-estimate on the prompts whose true token is a word.

    Returns (report, kept_prompts, total_prompts). Prompt ids follow the
    experiment convention (prompt_id_for of each prompt's index).
    """
    keep = {
        prompt_id_for(i)
        for i, p in enumerate(prompts)
        if p.next_after is not None and is_word_token(p.true_next, p.next_after, vocab)
    }
    subset = [s for s in records if s.prompt_id in keep]
    if not subset:
        raise ValueError("word-token filter removed every prompt")
    report = estimate_from_records(subset)
    return report, len(keep), len(prompts)
