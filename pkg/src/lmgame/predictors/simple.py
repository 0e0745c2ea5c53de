"""Degenerate predictors for tests and experiments, plus descriptor plumbing."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from lmgame.corpus.splits import CorpusSplit, PromptInstance
from lmgame.predictors.base import Distribution, floor_and_normalize
from lmgame.predictors.ngram import NGramModel, ngram_train


def point_mass(token: int, vocab_size: int) -> Distribution:
    vec = np.zeros(vocab_size)
    vec[token] = 1.0
    return floor_and_normalize(vec)


class UniformPredictor:
    def __init__(self, vocab_size: int, display_name: str = "uniform"):
        self.vocab_size = vocab_size
        self.display_name = display_name
        self._dist = floor_and_normalize(np.full(vocab_size, 1.0 / vocab_size))

    def distribution(self, context: Sequence[int]) -> Distribution:
        return self._dist


class LookupPredictor:
    """Returns stored rows keyed by exact context; optional default row.

    Rows are floored and normalized once at construction and returned as-is,
    so a stored row is reproduced exactly.
    """

    def __init__(
        self,
        vocab_size: int,
        table: dict[tuple[int, ...], Sequence[float]],
        default: Sequence[float] | None = None,
        display_name: str = "lookup",
    ):
        self.vocab_size = vocab_size
        self.display_name = display_name
        self._table = {
            tuple(ctx): floor_and_normalize(row) for ctx, row in table.items()
        }
        self._default = floor_and_normalize(default) if default is not None else None

    def distribution(self, context: Sequence[int]) -> Distribution:
        dist = self._table.get(tuple(context), self._default)
        if dist is None:
            raise KeyError(f"no stored row for context of length {len(context)}")
        return dist

    @classmethod
    def oracle_from_prompts(
        cls, prompts: Sequence[PromptInstance], vocab_size: int
    ) -> "LookupPredictor":
        """Point mass on each prompt's true next token (a perfect predictor)."""
        table = {p.context: point_mass(p.true_next, vocab_size).probs for p in prompts}
        return cls(vocab_size, table, display_name="oracle")


_KINDS = ("ngram", "lookup", "uniform", "remote")


@dataclass(frozen=True)
class PredictorDescriptor:
    """Serializable recipe for building a predictor."""

    kind: str
    parameters: dict = field(default_factory=dict)
    display_name: str = ""

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown predictor kind {self.kind!r} (expected one of {_KINDS})")
        p = self.parameters
        if self.kind == "ngram" and not ("path" in p or ("order" in p and "smoothing_k" in p)):
            raise ValueError("ngram descriptor needs 'path' or 'order' + 'smoothing_k'")
        if self.kind == "lookup" and "path" not in p:
            raise ValueError("lookup descriptor needs 'path'")
        if self.kind == "remote" and "base_url" not in p:
            raise ValueError("remote descriptor needs 'base_url'")

    @classmethod
    def from_json(cls, obj: dict) -> "PredictorDescriptor":
        return cls(
            kind=obj["kind"],
            parameters=obj.get("parameters", {}),
            display_name=obj.get("display_name", ""),
        )

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "parameters": self.parameters,
            "display_name": self.display_name,
        }


def build_predictor(
    descriptor: PredictorDescriptor,
    vocab_size: int,
    splits: dict[str, CorpusSplit] | None = None,
    base_dir: str | Path | None = None,
):
    """Materialize a predictor from its descriptor.

    ngram descriptors either load a serialized model ('path') or train one on
    splits['train_split'] (default 'train'). Relative paths resolve against
    base_dir.
    """
    p = descriptor.parameters
    name = descriptor.display_name or None

    def _resolve(path: str) -> Path:
        path = Path(path)
        return path if path.is_absolute() or base_dir is None else Path(base_dir) / path

    if descriptor.kind == "uniform":
        return UniformPredictor(vocab_size, display_name=name or "uniform")
    if descriptor.kind == "ngram":
        if "path" in p:
            model = NGramModel.load(_resolve(p["path"]))
            if name:
                model.display_name = name
            return model
        split_name = p.get("train_split", "train")
        if not splits or split_name not in splits:
            raise ValueError(f"ngram descriptor needs split {split_name!r}")
        return ngram_train(
            splits[split_name], p["order"], p["smoothing_k"], vocab_size, display_name=name
        )
    if descriptor.kind == "lookup":
        obj = json.loads(_resolve(p["path"]).read_text(encoding="utf-8"))
        table = {
            tuple(int(t) for t in key.split()): row for key, row in obj["table"].items()
        }
        return LookupPredictor(
            vocab_size, table, default=obj.get("default"), display_name=name or "lookup"
        )
    if descriptor.kind == "remote":
        from lmgame.predictors.remote import RemotePredictor

        return RemotePredictor(p["base_url"], display_name=name)
    raise AssertionError(descriptor.kind)
