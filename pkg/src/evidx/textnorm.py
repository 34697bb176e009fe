"""Text normalization and character-level similarity for value comparison."""

from __future__ import annotations

import re
import unicodedata
from difflib import SequenceMatcher

_WS_RUN = re.compile(r"\s+")


def _is_punct(ch: str) -> bool:
    return unicodedata.category(ch).startswith("P")


def normalize(s: str) -> str:
    """Canonical comparison form: NFKC, lowercased, whitespace collapsed,
    leading/trailing punctuation stripped. Internal punctuation is kept."""
    s = unicodedata.normalize("NFKC", s)
    s = _WS_RUN.sub(" ", s).strip().lower()
    while s and (_is_punct(s[0]) or s[0] == " "):
        s = s[1:]
    while s and (_is_punct(s[-1]) or s[-1] == " "):
        s = s[:-1]
    return s


def similarity(a: str, b: str) -> float:
    """Matching-blocks ratio 2M/(|a|+|b|): recursively take the longest common
    contiguous substring, recurse on both flanks, and sum the matched chars M.

    Operands are ordered lexicographically before matching so the tie-breaking
    inside the block search cannot make the ratio asymmetric.  Two empty
    strings are identical (1.0); empty vs non-empty is 0.0.
    """
    if not a and not b:
        return 1.0
    if b < a:
        a, b = b, a
    return SequenceMatcher(None, a, b, autojunk=False).ratio()
