"""Pre-generated, frozen question sets.

Sets are generated once from (corpus split, generator, seed) and stored, so
every participant on a set answers identical prompts and candidates, and
simulated responders can replay exactly what humans saw.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from lmgame.corpus.bpe import Tokenizer
from lmgame.corpus.splits import CorpusSplit, PromptInstance, sample_prompts
from lmgame.elicitation import ComparisonRound, build_rounds
from lmgame.predictors.base import Predictor


@dataclass(frozen=True)
class QuestionSet:
    set_id: str
    game: str
    prompts: tuple[PromptInstance, ...]
    context_texts: tuple[str, ...]
    rounds: tuple[ComparisonRound, ...] = ()

    def __post_init__(self):
        if self.game not in ("top1", "compare"):
            raise ValueError(f"unknown game {self.game!r}")

    def __len__(self) -> int:
        return len(self.rounds) if self.game == "compare" else len(self.prompts)


def build_question_set(
    set_id: str,
    game: str,
    split: CorpusSplit,
    tokenizer: Tokenizer,
    n_prompts: int,
    seed: int,
    generator: Predictor | None = None,
    candidates_per_prompt: int = 10,
    max_context: int = 120,
) -> QuestionSet:
    prompts = tuple(sample_prompts(split, n_prompts, max_context, seed))
    if game == "top1":
        texts = tuple(tokenizer.decode(p.context) for p in prompts)
        return QuestionSet(set_id, game, prompts, texts)
    if generator is None:
        raise ValueError("compare sets need a generator")
    rng = np.random.default_rng(seed)
    rounds: list[ComparisonRound] = []
    for i, prompt in enumerate(prompts):
        rounds.extend(
            build_rounds(
                prompt,
                generator,
                candidates_per_prompt,
                rng,
                prompt_id=f"{set_id}:p{i:05d}",
            )
        )
    texts = tuple(tokenizer.decode(r.context) for r in rounds)
    return QuestionSet(set_id, game, prompts, texts, tuple(rounds))


def _prompt_to_json(p: PromptInstance) -> dict:
    return {
        "context": list(p.context),
        "true_next": p.true_next,
        "origin": list(p.origin),
        "next_after": p.next_after,
    }


def _prompt_from_json(obj: dict) -> PromptInstance:
    return PromptInstance(
        context=tuple(obj["context"]),
        true_next=obj["true_next"],
        origin=tuple(obj["origin"]),
        next_after=obj["next_after"],
    )


def _round_to_json(r: ComparisonRound) -> dict:
    return {
        "round_id": r.round_id,
        "prompt_id": r.prompt_id,
        "context": list(r.context),
        "true_candidate": r.true_candidate,
        "sampled_candidate": r.sampled_candidate,
        "g_true": r.g_true,
        "g_sampled": r.g_sampled,
        "true_shown_first": r.true_shown_first,
        "multiplicity": r.multiplicity,
        "auto": r.auto,
    }


def _round_from_json(obj: dict) -> ComparisonRound:
    return ComparisonRound(
        round_id=obj["round_id"],
        prompt_id=obj["prompt_id"],
        context=tuple(obj["context"]),
        true_candidate=obj["true_candidate"],
        sampled_candidate=obj["sampled_candidate"],
        g_true=obj["g_true"],
        g_sampled=obj["g_sampled"],
        true_shown_first=obj["true_shown_first"],
        multiplicity=obj["multiplicity"],
        auto=obj["auto"],
    )


def save_question_sets(sets: dict[str, QuestionSet], path: str | Path) -> None:
    payload = {
        sid: {
            "set_id": qs.set_id,
            "game": qs.game,
            "prompts": [_prompt_to_json(p) for p in qs.prompts],
            "context_texts": list(qs.context_texts),
            "rounds": [_round_to_json(r) for r in qs.rounds],
        }
        for sid, qs in sets.items()
    }
    Path(path).write_text(json.dumps(payload, sort_keys=True), encoding="utf-8")


def load_question_sets(path: str | Path) -> dict[str, QuestionSet]:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    sets = {}
    for sid, obj in payload.items():
        sets[sid] = QuestionSet(
            set_id=obj["set_id"],
            game=obj["game"],
            prompts=tuple(_prompt_from_json(p) for p in obj["prompts"]),
            context_texts=tuple(obj["context_texts"]),
            rounds=tuple(_round_from_json(r) for r in obj["rounds"]),
        )
    return sets
