"""Small text helpers shared across modules: whitespace normalization,
tokenization, rule-based sentence splitting, and citation extraction."""

from __future__ import annotations

import re

CITATION_RE = re.compile(r"\[(\d+)\]")

# Words after which a period does not end a sentence.
_ABBREVIATIONS = {
    "mr", "mrs", "ms", "dr", "prof", "st", "jr", "sr", "vs", "no", "etc",
    "e.g", "i.e", "cf", "al",
}

_TERMINAL_RE = re.compile(r"[.!?]+")
# Closing quotes/brackets that belong to the sentence, then any run of
# bracketed citations ("He swam. [2]" is one sentence citing doc 2).
_TRAILER_RE = re.compile(r"[\"'\)\]]*(?:\s*\[\d+\])*")


def normalize_ws(text: str) -> str:
    """Collapse all whitespace runs to single spaces and trim."""
    return " ".join(text.split())


def tokenize(text: str) -> list[str]:
    """Lowercased whitespace tokens."""
    return text.lower().split()


def _is_abbreviation(text: str, dot_index: int) -> bool:
    """True when the period at dot_index follows a known abbreviation or
    a single-letter initial ("J. K. Rowling")."""
    start = dot_index
    while start > 0 and not text[start - 1].isspace():
        start -= 1
    word = text[start:dot_index].rstrip(".")
    if not word:
        return False
    if word.lower() in _ABBREVIATIONS:
        return True
    return len(word) == 1 and word.isalpha() and word.isupper()


def split_sentences(text: str) -> list[str]:
    """Split text into sentences on terminal punctuation.

    Deliberately simple and deterministic: no statistical model, just
    punctuation plus an abbreviation guard. Trailing bracketed citations
    stay attached to the sentence they follow.
    """
    sentences: list[str] = []
    pos = 0
    for match in _TERMINAL_RE.finditer(text):
        if "." in match.group() and len(match.group()) == 1:
            if _is_abbreviation(text, match.start()):
                continue
        end = match.end()
        trailer = _TRAILER_RE.match(text, end)
        if trailer:
            end = trailer.end()
        # Only break at a real boundary: end of text or whitespace next.
        if end < len(text) and not text[end].isspace():
            continue
        if end <= pos:
            continue
        sentence = text[pos:end].strip()
        if sentence:
            sentences.append(sentence)
        pos = end
    tail = text[pos:].strip()
    if tail:
        sentences.append(tail)
    return sentences


def extract_citations(sentence: str) -> list[int]:
    """All bracketed integers in a sentence, in order of appearance."""
    return [int(m) for m in CITATION_RE.findall(sentence)]


def strip_citations(sentence: str) -> str:
    """Remove bracketed citations and re-normalize spacing."""
    return normalize_ws(CITATION_RE.sub("", sentence))
