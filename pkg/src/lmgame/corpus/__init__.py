"""Tokenization, corpus splits, prompt sampling, and token filters."""

from lmgame.corpus.vocab import Vocab, bytes_to_unicode, build_whitespace_vocab
from lmgame.corpus.bpe import (
    LOSSY_MARKER,
    ByteBpeTokenizer,
    WhitespaceTokenizer,
    bpe_decode,
    bpe_encode,
    decode_bytes_lossy,
)
from lmgame.corpus.filters import is_visually_empty, is_word_token, render_token
from lmgame.corpus.splits import (
    CorpusSplit,
    PromptInstance,
    build_splits,
    load_manifest,
    read_manifest_texts,
    sample_prompts,
    split_from_texts,
)

__all__ = [
    "Vocab",
    "bytes_to_unicode",
    "build_whitespace_vocab",
    "LOSSY_MARKER",
    "ByteBpeTokenizer",
    "WhitespaceTokenizer",
    "bpe_encode",
    "bpe_decode",
    "decode_bytes_lossy",
    "is_visually_empty",
    "is_word_token",
    "render_token",
    "CorpusSplit",
    "PromptInstance",
    "build_splits",
    "load_manifest",
    "read_manifest_texts",
    "sample_prompts",
    "split_from_texts",
]
