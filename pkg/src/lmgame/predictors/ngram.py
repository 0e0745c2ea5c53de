"""Add-k smoothed n-gram models with uniform interpolation across orders.

P(y | c) = (1/order) * sum_{m=0}^{order-1} P_m(y | suffix_m(c)) where P_m is
the add-k estimate from suffix counts of length m. No backoff: every order
contributes with equal weight, which keeps the count-based oracle simple.
"""

from __future__ import annotations

import json
from collections import Counter
from pathlib import Path
from typing import Sequence

import numpy as np

from lmgame.corpus.splits import CorpusSplit
from lmgame.predictors.base import Distribution, floor_and_normalize


class NGramModel:
    def __init__(
        self,
        order: int,
        smoothing_k: float,
        vocab_size: int,
        counts: dict[tuple[int, ...], Counter],
        display_name: str | None = None,
    ):
        if order < 1:
            raise ValueError("order must be >= 1")
        if smoothing_k <= 0:
            raise ValueError("smoothing_k must be > 0")
        self.order = order
        self.smoothing_k = smoothing_k
        self.vocab_size = vocab_size
        self.display_name = display_name or f"ngram(order={order}, k={smoothing_k:g})"
        # Frozen arrays per suffix for fast scatter-adds at prediction time.
        self._tables: dict[tuple[int, ...], tuple[np.ndarray, np.ndarray, int]] = {}
        for suffix, counter in counts.items():
            ids = np.fromiter(counter.keys(), dtype=np.int64, count=len(counter))
            vals = np.fromiter(counter.values(), dtype=np.float64, count=len(counter))
            self._tables[suffix] = (ids, vals, int(vals.sum()))
        self._cache: dict[tuple[int, ...], Distribution] = {}

    def _order_probs(self, suffix: tuple[int, ...]) -> np.ndarray:
        k, v = self.smoothing_k, self.vocab_size
        table = self._tables.get(suffix)
        if table is None:
            return np.full(v, 1.0 / v)
        ids, vals, total = table
        probs = np.full(v, k / (total + k * v))
        probs[ids] += vals / (total + k * v)
        return probs

    def distribution(self, context: Sequence[int]) -> Distribution:
        key = tuple(context[-(self.order - 1) :]) if self.order > 1 else ()
        cached = self._cache.get(key)
        if cached is not None:
            return cached
        acc = np.zeros(self.vocab_size)
        for m in range(self.order):
            eff = min(m, len(key))
            acc += self._order_probs(key[len(key) - eff :] if eff else ())
        dist = floor_and_normalize(acc / self.order)
        self._cache[key] = dist
        return dist

    def to_json(self) -> dict:
        counts: dict[str, dict[str, int]] = {}
        for suffix, (ids, vals, _) in self._tables.items():
            skey = " ".join(map(str, suffix))
            counts[skey] = {str(int(i)): int(c) for i, c in zip(ids, vals)}
        return {
            "order": self.order,
            "smoothing_k": self.smoothing_k,
            "vocab_size": self.vocab_size,
            "display_name": self.display_name,
            "counts": counts,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "NGramModel":
        counts: dict[tuple[int, ...], Counter] = {}
        for skey, row in obj["counts"].items():
            suffix = tuple(int(t) for t in skey.split()) if skey else ()
            counts[suffix] = Counter({int(t): int(c) for t, c in row.items()})
        return cls(
            order=obj["order"],
            smoothing_k=obj["smoothing_k"],
            vocab_size=obj["vocab_size"],
            counts=counts,
            display_name=obj.get("display_name"),
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), sort_keys=True), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "NGramModel":
        return cls.from_json(json.loads(Path(path).read_text(encoding="utf-8")))


def ngram_train(
    corpus: CorpusSplit,
    order: int,
    smoothing_k: float,
    vocab_size: int | None = None,
    display_name: str | None = None,
) -> NGramModel:
    """Count suffixes of every length below `order` over the corpus.

    Deterministic and invariant to document order (pure counting). vocab_size
    defaults to one past the largest token id seen.
    """
    if order < 1:
        raise ValueError("order must be >= 1")
    if smoothing_k <= 0:
        raise ValueError("smoothing_k must be > 0")
    if corpus.total_tokens == 0:
        raise ValueError("corpus is empty")
    counts: dict[tuple[int, ...], Counter] = {}
    max_id = 0
    for doc in corpus.documents:
        if doc:
            max_id = max(max_id, max(doc))
        for m in range(order):
            for i in range(m, len(doc)):
                key = tuple(doc[i - m : i])
                bucket = counts.get(key)
                if bucket is None:
                    bucket = counts[key] = Counter()
                bucket[doc[i]] += 1
    v = vocab_size if vocab_size is not None else max_id + 1
    return NGramModel(order, smoothing_k, v, counts, display_name=display_name)
