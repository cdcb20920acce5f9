"""Tokenization shared by the table model and the preprocessing transforms."""

from __future__ import annotations

import re

# Literal written into masked header cells and passed verbatim to LM bridges.
MASK_TOKEN = "[UNK]"
# Token the mask literal collapses to for bag-of-words and lexicon lookups.
MASK_WORD = "unk"

_NON_ALNUM = re.compile(r"[\W_]+", re.UNICODE)


def tokenize(text: str) -> list[str]:
    """Lowercase and split on maximal runs of non-alphanumeric characters.

    Empty tokens are dropped, so an empty or all-punctuation cell yields [].
    The mask literal is special-cased so a masked header cell always maps to
    the single token "unk".
    """
    stripped = text.strip()
    if stripped == MASK_TOKEN:
        return [MASK_WORD]
    return [tok for tok in _NON_ALNUM.split(stripped.lower()) if tok]
