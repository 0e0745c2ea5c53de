"""Token vocabulary: dense id <-> byte sequence mapping plus ranked BPE merges.

Vocabularies load from the de-facto standard two-file byte-level BPE layout
(a JSON object mapping token string -> id, and a merges file with one
space-separated pair per line, rank = line number), or are built directly
from a corpus by the tiny whitespace tokenizer for desk-scale tests.
"""

from __future__ import annotations

import functools
import json
import regex as re
from pathlib import Path


@functools.lru_cache(maxsize=1)
def bytes_to_unicode() -> dict[int, str]:
    """Reversible byte -> printable-unicode map used by the two-file format.

    Printable bytes map to themselves; the rest are shifted into the 256+
    codepoint range so every byte has a visible, JSON-safe representation.
    """
    printable = (
        list(range(ord("!"), ord("~") + 1))
        + list(range(ord("\xa1"), ord("\xac") + 1))
        + list(range(ord("\xae"), ord("\xff") + 1))
    )
    codepoints = printable[:]
    shift = 0
    for b in range(256):
        if b not in printable:
            printable.append(b)
            codepoints.append(256 + shift)
            shift += 1
    return {b: chr(c) for b, c in zip(printable, codepoints)}


@functools.lru_cache(maxsize=1)
def unicode_to_bytes() -> dict[str, int]:
    return {ch: b for b, ch in bytes_to_unicode().items()}


def token_string_to_bytes(token: str) -> bytes:
    """Convert a token string from the two-file format back to raw bytes."""
    table = unicode_to_bytes()
    return bytes(table[ch] for ch in token)


def bytes_to_token_string(data: bytes) -> str:
    table = bytes_to_unicode()
    return "".join(table[b] for b in data)


class Vocab:
    """The token universe: dense ids 0..V-1, unique byte sequences, ranked merges."""

    def __init__(self, entries: list[bytes], merges: list[tuple[bytes, bytes]] = ()):
        self.entries: tuple[bytes, ...] = tuple(entries)
        self.merges: tuple[tuple[bytes, bytes], ...] = tuple(
            (bytes(a), bytes(b)) for a, b in merges
        )
        self._id_of: dict[bytes, int] = {}
        for i, seq in enumerate(self.entries):
            if seq in self._id_of:
                raise ValueError(f"duplicate byte sequence for ids {self._id_of[seq]} and {i}")
            self._id_of[seq] = i
        self.merge_ranks: dict[tuple[bytes, bytes], int] = {
            pair: rank for rank, pair in enumerate(self.merges)
        }
        for a, b in self.merges:
            if a + b not in self._id_of:
                raise ValueError(f"merge output {a + b!r} not in vocabulary")

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, seq: bytes) -> bool:
        return seq in self._id_of

    def token_bytes(self, token_id: int) -> bytes:
        if not 0 <= token_id < len(self.entries):
            raise ValueError(f"token id {token_id} out of range (V={len(self.entries)})")
        return self.entries[token_id]

    def id_for(self, seq: bytes) -> int:
        return self._id_of[seq]

    def items(self):
        """Yield (token_id, byte_sequence) pairs in id order."""
        return enumerate(self.entries)

    @property
    def has_byte_fallback(self) -> bool:
        """True when every single byte is a token, guaranteeing total coverage."""
        return all(bytes([b]) in self._id_of for b in range(256))

    @classmethod
    def from_gpt2_files(cls, vocab_path: str | Path, merges_path: str | Path) -> "Vocab":
        """Load the standard two-file layout (vocab JSON + ranked merges)."""
        vocab_path, merges_path = Path(vocab_path), Path(merges_path)
        raw = json.loads(vocab_path.read_text(encoding="utf-8"))
        if not isinstance(raw, dict):
            raise ValueError(f"{vocab_path}: expected a JSON object mapping token -> id")
        entries: list[bytes | None] = [None] * len(raw)
        for token, idx in raw.items():
            if not isinstance(idx, int) or not 0 <= idx < len(raw):
                raise ValueError(f"{vocab_path}: ids must be dense 0..V-1, got {idx!r}")
            if entries[idx] is not None:
                raise ValueError(f"{vocab_path}: duplicate id {idx}")
            entries[idx] = token_string_to_bytes(token)
        merges: list[tuple[bytes, bytes]] = []
        for lineno, line in enumerate(merges_path.read_text(encoding="utf-8").splitlines(), 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split(" ")
            if len(parts) != 2:
                raise ValueError(f"{merges_path}:{lineno}: expected 'LEFT RIGHT', got {line!r}")
            merges.append((token_string_to_bytes(parts[0]), token_string_to_bytes(parts[1])))
        return cls(entries, merges)  # type: ignore[arg-type]

    def save_gpt2_files(self, vocab_path: str | Path, merges_path: str | Path) -> None:
        vocab_obj = {bytes_to_token_string(seq): i for i, seq in enumerate(self.entries)}
        Path(vocab_path).write_text(
            json.dumps(vocab_obj, ensure_ascii=False, indent=0), encoding="utf-8"
        )
        lines = [
            f"{bytes_to_token_string(a)} {bytes_to_token_string(b)}" for a, b in self.merges
        ]
        Path(merges_path).write_text("\n".join(lines) + "\n", encoding="utf-8")


# Splits text into pieces for the whitespace tokenizer: a non-space run with at
# most one preceding space, or a single whitespace character. Concatenating the
# pieces reproduces the input, so decoding is lossless.
_WHITESPACE_PIECE = re.compile(r" ?[^\s]+|\s")


def whitespace_pieces(text: str) -> list[str]:
    return _WHITESPACE_PIECE.findall(text)


def build_whitespace_vocab(texts: list[str]) -> Vocab:
    """Build a word-level Vocab (no merges) covering every piece of the texts."""
    pieces = set()
    for text in texts:
        pieces.update(whitespace_pieces(text))
    entries = sorted(piece.encode("utf-8") for piece in pieces)
    return Vocab(entries)
