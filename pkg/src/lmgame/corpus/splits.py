"""Corpus splits and prompt sampling."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from lmgame.corpus.bpe import Tokenizer

DEFAULT_MAX_CONTEXT = 120


@dataclass(frozen=True)
class CorpusSplit:
    """A named set of tokenized documents. Immutable after construction."""

    name: str
    documents: tuple[tuple[int, ...], ...]
    source_digest: str

    def __post_init__(self):
        if not self.documents:
            raise ValueError(f"split {self.name!r} has no documents")

    @property
    def total_tokens(self) -> int:
        return sum(len(d) for d in self.documents)


@dataclass(frozen=True)
class PromptInstance:
    """A context plus the true next token, drawn from one split position.

    next_after is the token following true_next when it exists; the
    word-token filter needs it.
    """

    context: tuple[int, ...]
    true_next: int
    origin: tuple[int, int]
    next_after: int | None = None


def _digest(texts: list[str]) -> str:
    h = hashlib.sha256()
    for text in texts:
        h.update(text.encode("utf-8"))
        h.update(b"\x00")
    return h.hexdigest()


def split_from_texts(name: str, texts: list[str], tokenizer: Tokenizer) -> CorpusSplit:
    docs = tuple(tuple(tokenizer.encode(t)) for t in texts)
    return CorpusSplit(name=name, documents=docs, source_digest=_digest(texts))


def _document_digests(texts: list[str]) -> set[str]:
    return {hashlib.sha256(t.encode("utf-8")).hexdigest() for t in texts}


def read_manifest_texts(manifest_path: str | Path) -> dict[str, list[str]]:
    """Read raw document texts per split from a JSON manifest.

    Manifest format: {"splits": {"train": [<entry>, ...], ...}} where an
    entry is a path (one document per file) or {"path": ..., "records": true}
    (one document per non-empty line). Paths resolve relative to the
    manifest.
    """
    manifest_path = Path(manifest_path)
    spec = json.loads(manifest_path.read_text(encoding="utf-8"))
    if "splits" not in spec or not isinstance(spec["splits"], dict):
        raise ValueError(f"{manifest_path}: expected an object with a 'splits' mapping")
    base = manifest_path.parent
    texts_by_split: dict[str, list[str]] = {}
    for name, entries in spec["splits"].items():
        texts: list[str] = []
        for entry in entries:
            if isinstance(entry, str):
                path, records = base / entry, False
            else:
                path, records = base / entry["path"], bool(entry.get("records", False))
            raw = path.read_text(encoding="utf-8")
            if records:
                texts.extend(line for line in raw.splitlines() if line.strip())
            else:
                texts.append(raw)
        texts_by_split[name] = texts
    return texts_by_split


def build_splits(
    texts_by_split: dict[str, list[str]], tokenizer: Tokenizer
) -> dict[str, CorpusSplit]:
    """Tokenize per-split texts, refusing splits that share a document."""
    splits: dict[str, CorpusSplit] = {}
    digests: dict[str, set[str]] = {}
    for name, texts in texts_by_split.items():
        splits[name] = split_from_texts(name, texts, tokenizer)
        digests[name] = _document_digests(texts)
    names = sorted(digests)
    for i, a in enumerate(names):
        for b in names[i + 1 :]:
            shared = digests[a] & digests[b]
            if shared:
                raise ValueError(f"splits {a!r} and {b!r} share {len(shared)} document(s)")
    return splits


def load_manifest(
    manifest_path: str | Path, tokenizer: Tokenizer
) -> dict[str, CorpusSplit]:
    """Read a manifest and tokenize every split."""
    return build_splits(read_manifest_texts(manifest_path), tokenizer)


def sample_prompts(
    split: CorpusSplit,
    count: int,
    max_context: int = DEFAULT_MAX_CONTEXT,
    seed: int = 0,
) -> list[PromptInstance]:
    """Draw prompts uniformly over eligible positions, deterministically.

    An eligible position is any (document, offset) with offset >= 1; the
    context is the up-to-max_context tokens before the offset and the true
    next token is the token at it. Sampling is with replacement.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    doc_lengths = np.array([len(d) for d in split.documents], dtype=np.int64)
    eligible_per_doc = np.maximum(doc_lengths - 1, 0)
    total = int(eligible_per_doc.sum())
    if total == 0:
        raise ValueError(f"split {split.name!r} has no eligible positions")
    starts = np.concatenate([[0], np.cumsum(eligible_per_doc)])
    rng = np.random.default_rng(seed)
    flat = rng.integers(0, total, size=count)
    prompts = []
    for f in flat:
        doc_idx = int(np.searchsorted(starts, f, side="right") - 1)
        offset = int(f - starts[doc_idx]) + 1
        doc = split.documents[doc_idx]
        context = doc[max(0, offset - max_context) : offset]
        next_after = doc[offset + 1] if offset + 1 < len(doc) else None
        prompts.append(
            PromptInstance(
                context=context,
                true_next=doc[offset],
                origin=(doc_idx, offset),
                next_after=next_after,
            )
        )
    return prompts
