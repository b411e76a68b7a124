"""Hand feature templates for the token tagger."""
from __future__ import annotations

import re
from typing import Sequence

TEMPLATE_IDS = (
    "w", "shape", "pre3", "suf3", "num", "pct", "slash",
    "w[-2]", "w[-1]", "w[+1]", "w[+2]", "BOS", "EOS",
)

_DIGIT_RE = re.compile(r"\d")


def word_shape(token: str) -> str:
    """Letters to x/X, digits to 9, everything else kept ("1.72%" -> "9.99%")."""
    out = []
    for ch in token:
        if ch.isalpha():
            out.append("X" if ch.isupper() else "x")
        elif ch.isdigit():
            out.append("9")
        else:
            out.append(ch)
    return "".join(out)


def featurize(tokens: Sequence[str], i: int) -> list[str]:
    """Feature strings for position i: word identity, shape, affixes,
    numeric cues, a +/-2 token window, and sentence-boundary markers."""
    if not 0 <= i < len(tokens):
        raise IndexError(f"position {i} outside 0..{len(tokens) - 1}")
    tok = tokens[i]
    low = tok.lower()
    feats = [
        f"w={low}",
        f"shape={word_shape(tok)}",
        f"pre3={low[:3]}",
        f"suf3={low[-3:]}",
    ]
    if _DIGIT_RE.search(tok):
        feats.append("num")
    if "%" in tok:
        feats.append("pct")
    if "/" in tok:
        feats.append("slash")
    for off in (-2, -1, 1, 2):
        j = i + off
        if 0 <= j < len(tokens):
            feats.append(f"w[{off:+d}]={tokens[j].lower()}")
    if i == 0:
        feats.append("BOS")
    if i == len(tokens) - 1:
        feats.append("EOS")
    return feats
