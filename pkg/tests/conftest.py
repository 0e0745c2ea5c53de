"""Shared fixtures: a seeded Markov toy corpus and models trained on it."""

from __future__ import annotations

import numpy as np
import pytest

from lmgame.corpus import (
    WhitespaceTokenizer,
    build_whitespace_vocab,
    split_from_texts,
)
from lmgame.predictors import ngram_train

WORDS = [
    "the", "a", "fox", "dog", "cat", "bird", "runs", "sleeps", "jumps", "sees",
    "eats", "red", "blue", "old", "young", "quick", "lazy", "in", "on", "over",
    "under", "field", "house", "river", "tree", "morning", "evening", "quietly",
    "loudly", "again",
]


def make_toy_texts(n_docs: int, doc_len: int, seed: int, chain_seed: int = 7) -> list[str]:
    """Documents from a planted first-order Markov chain over a small word list.

    The chain (fixed by chain_seed, shared by every split) gives higher-order
    models structure to learn beyond unigram frequencies; each document is
    one line ending in a newline.
    """
    chain_rng = np.random.default_rng(chain_seed)
    k = len(WORDS)
    trans = chain_rng.dirichlet(np.full(k, 0.25), size=k)
    start = chain_rng.dirichlet(np.full(k, 0.5))
    rng = np.random.default_rng(seed)
    texts = []
    for _ in range(n_docs):
        idx = rng.choice(k, p=start)
        words = [WORDS[idx]]
        for _ in range(doc_len - 1):
            idx = rng.choice(k, p=trans[idx])
            words.append(WORDS[idx])
        texts.append(" ".join(words) + "\n")
    return texts


@pytest.fixture(scope="session")
def toy_texts():
    return {
        "train": make_toy_texts(80, 50, seed=11),
        "validation": make_toy_texts(40, 50, seed=23),
    }


@pytest.fixture(scope="session")
def vocab(toy_texts):
    return build_whitespace_vocab(toy_texts["train"] + toy_texts["validation"])


@pytest.fixture(scope="session")
def tokenizer(vocab):
    return WhitespaceTokenizer(vocab)


@pytest.fixture(scope="session")
def splits(toy_texts, tokenizer):
    return {
        name: split_from_texts(name, texts, tokenizer)
        for name, texts in toy_texts.items()
    }


@pytest.fixture(scope="session")
def train_split(splits):
    return splits["train"]


@pytest.fixture(scope="session")
def val_split(splits):
    return splits["validation"]


@pytest.fixture(scope="session")
def generator(train_split, vocab):
    return ngram_train(train_split, order=2, smoothing_k=0.5, vocab_size=len(vocab))


@pytest.fixture(scope="session")
def weak_model(train_split, vocab):
    return ngram_train(train_split, order=1, smoothing_k=1.0, vocab_size=len(vocab))


@pytest.fixture(scope="session")
def strong_model(train_split, vocab):
    # order-2 matches the corpus process; low smoothing makes it the best model
    return ngram_train(train_split, order=2, smoothing_k=0.1, vocab_size=len(vocab))


@pytest.fixture(scope="session")
def gen_order4(train_split, vocab):
    # high-order reference generator, maximally dissimilar from the unigram
    return ngram_train(train_split, order=4, smoothing_k=0.2, vocab_size=len(vocab))
