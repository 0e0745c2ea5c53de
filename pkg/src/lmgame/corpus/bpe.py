"""Byte-level BPE encode/decode plus the whitespace tokenizer for desk tests.

Encoding applies the standard GPT-2 split pattern, then greedily merges the
lowest-rank adjacent pair inside each chunk. Every single byte is a token in
this format, so any unicode string encodes (total coverage) and decoding
reproduces the input bytes exactly.
"""

from __future__ import annotations

from typing import Protocol, Sequence

import regex as re

from lmgame.corpus.vocab import Vocab, whitespace_pieces

# Rendered in place of byte runs that do not decode as UTF-8.
LOSSY_MARKER = "<?>"

_SPLIT_PATTERN = re.compile(
    r"""'(?:[sdmt]|ll|ve|re)| ?\p{L}+| ?\p{N}+| ?[^\s\p{L}\p{N}]+|\s+(?!\S)|\s+"""
)


def decode_bytes_lossy(data: bytes) -> str:
    """Decode UTF-8 bytes, rendering each maximal undecodable run as one marker."""
    parts: list[str] = []
    pos = 0
    in_bad_run = False
    while pos < len(data):
        try:
            parts.append(data[pos:].decode("utf-8"))
            break
        except UnicodeDecodeError as err:
            if err.start > 0:
                parts.append(data[pos : pos + err.start].decode("utf-8"))
                in_bad_run = False
            if not in_bad_run:
                parts.append(LOSSY_MARKER)
                in_bad_run = True
            pos += max(err.end, err.start + 1)
    return "".join(parts)


class Tokenizer(Protocol):
    vocab: Vocab

    def encode(self, text: str) -> list[int]: ...

    def decode(self, tokens: Sequence[int]) -> str: ...


class ByteBpeTokenizer:
    """Greedy lowest-rank-merge byte-level BPE over a two-file-format vocab."""

    def __init__(self, vocab: Vocab):
        if not vocab.has_byte_fallback:
            raise ValueError("byte-level BPE requires all 256 single-byte tokens")
        self.vocab = vocab
        self._ranks = vocab.merge_ranks

    def _merge_chunk(self, chunk: bytes) -> list[bytes]:
        parts = [chunk[i : i + 1] for i in range(len(chunk))]
        while len(parts) > 1:
            best_rank = None
            best_idx = -1
            for i in range(len(parts) - 1):
                rank = self._ranks.get((parts[i], parts[i + 1]))
                if rank is not None and (best_rank is None or rank < best_rank):
                    best_rank, best_idx = rank, i
            if best_rank is None:
                break
            pair = (parts[best_idx], parts[best_idx + 1])
            merged: list[bytes] = []
            i = 0
            while i < len(parts):
                if i < len(parts) - 1 and (parts[i], parts[i + 1]) == pair:
                    merged.append(parts[i] + parts[i + 1])
                    i += 2
                else:
                    merged.append(parts[i])
                    i += 1
            parts = merged
        return parts

    def encode(self, text: str) -> list[int]:
        ids: list[int] = []
        for chunk in _SPLIT_PATTERN.findall(text):
            for part in self._merge_chunk(chunk.encode("utf-8")):
                ids.append(self.vocab.id_for(part))
        return ids

    def decode(self, tokens: Sequence[int]) -> str:
        return decode_bytes_lossy(b"".join(self.vocab.token_bytes(t) for t in tokens))


class WhitespaceTokenizer:
    """Word-level tokenizer over a corpus-built Vocab (no merges).

    Coverage is limited to pieces present in the vocabulary; meant for
    desk-scale corpora where the vocab was built from the same texts.
    """

    def __init__(self, vocab: Vocab):
        self.vocab = vocab

    def encode(self, text: str) -> list[int]:
        ids = []
        for piece in whitespace_pieces(text):
            data = piece.encode("utf-8")
            if data not in self.vocab:
                raise KeyError(f"piece {piece!r} not in vocabulary")
            ids.append(self.vocab.id_for(data))
        return ids

    def decode(self, tokens: Sequence[int]) -> str:
        return decode_bytes_lossy(b"".join(self.vocab.token_bytes(t) for t in tokens))


def bpe_encode(text: str, vocab: Vocab) -> list[int]:
    return ByteBpeTokenizer(vocab).encode(text)


def bpe_decode(tokens: Sequence[int], vocab: Vocab) -> str:
    return ByteBpeTokenizer(vocab).decode(tokens)
