"""Token filters: visually-empty exclusion and the word-token subset."""

from __future__ import annotations

import unicodedata

from lmgame.corpus.bpe import decode_bytes_lossy
from lmgame.corpus.vocab import Vocab


def render_token(token_id: int, vocab: Vocab) -> str:
    """The token's display form; undecodable byte runs show as the marker."""
    return decode_bytes_lossy(vocab.token_bytes(token_id))


def _visible_chars(text: str) -> str:
    return "".join(
        ch for ch in text if not ch.isspace() and not unicodedata.category(ch).startswith("C")
    )


def is_visually_empty(token_id: int, vocab: Vocab) -> bool:
    """True iff the token has no visible rendering.

    Covers whitespace/control-only tokens (newlines, tabs) and tokens whose
    bytes are not valid UTF-8 on their own (fragments of multi-byte
    characters), which a guessing interface cannot display or accept.
    """
    data = vocab.token_bytes(token_id)
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError:
        return True
    return not _visible_chars(text)


def is_word_token(token_id: int, next_token_id: int, vocab: Vocab) -> bool:
    """True iff the token is a space-initial, purely alphabetical word and
    the following token starts with a space (so the word is complete)."""
    data = vocab.token_bytes(token_id)
    if not data.startswith(b" "):
        return False
    try:
        rest = data[1:].decode("utf-8")
    except UnicodeDecodeError:
        return False
    if not rest or not rest.isalpha():
        return False
    return vocab.token_bytes(next_token_id).startswith(b" ")
