"""The predictor abstraction and the Distribution it returns.

Every distribution is strictly positive and normalized: outputs are clamped
elementwise to PROB_FLOOR and renormalized, so importance weights g(y|c)/g(x|c)
and elicited ratios stay finite.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Protocol, Sequence, runtime_checkable

import numpy as np

PROB_FLOOR = 1e-12
_SUM_TOL = 1e-9


@dataclass(frozen=True)
class Distribution:
    """A full probability vector over the vocabulary."""

    probs: np.ndarray

    def __post_init__(self):
        p = self.probs
        if p.ndim != 1:
            raise ValueError("probs must be a 1-d vector")
        if not np.all(p > 0):
            raise ValueError("probabilities must be strictly positive")
        total = float(p.sum())
        if abs(total - 1.0) > _SUM_TOL:
            raise ValueError(f"probabilities sum to {total}, not 1")

    def __len__(self) -> int:
        return len(self.probs)

    def prob(self, token: int) -> float:
        return float(self.probs[token])

    def argmax_token(self) -> int:
        # np.argmax returns the first maximum: ties break toward the lowest id.
        return int(np.argmax(self.probs))

    def sample(self, rng: np.random.Generator) -> int:
        return int(rng.choice(len(self.probs), p=self.probs))

    def sample_many(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return rng.choice(len(self.probs), size=n, p=self.probs)


def floor_and_normalize(vec: Sequence[float] | np.ndarray) -> Distribution:
    """Clamp to the floor and renormalize; the standard way to build a Distribution."""
    v = np.asarray(vec, dtype=np.float64)
    v = np.maximum(v, PROB_FLOOR)
    return Distribution(v / v.sum())


@runtime_checkable
class Predictor(Protocol):
    """Maps a context (token sequence) to a next-token Distribution.

    Implementations must be pure: the same context always yields the same
    distribution, and trained models are immutable, so instances are safe to
    share across threads.
    """

    vocab_size: int
    display_name: str

    def distribution(self, context: Sequence[int]) -> Distribution: ...


def _check_context(predictor: Predictor, context: Sequence[int]) -> None:
    for t in context:
        if not 0 <= t < predictor.vocab_size:
            raise ValueError(f"context token {t} out of range (V={predictor.vocab_size})")


def predict_distribution(predictor: Predictor, context: Sequence[int]) -> Distribution:
    _check_context(predictor, context)
    return predictor.distribution(context)


def predict_top1(predictor: Predictor, context: Sequence[int]) -> int:
    return predict_distribution(predictor, context).argmax_token()


def sample_next(predictor: Predictor, context: Sequence[int], rng: np.random.Generator) -> int:
    return predict_distribution(predictor, context).sample(rng)
