"""Corpus ingestion, raw-text preprocessing, and mention-context extraction.

The annotated corpus lives in JSONL, one sentence per line:
``{"tokens": [...], "mentions": [{"start": i, "end": j, "entity": id}, ...]}``
with token-index spans (``end`` exclusive, spans non-overlapping).
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field

PAD_TOKEN = "<PAD>"
NUMBER_TOKEN = "7"
URL_TOKEN = "HTTP"

MIN_SENTENCE_CHARS = 40

_URL_RE = re.compile(r"(?:https?://\S+|www\.\S+|\S+@\S+\.\S+)", re.IGNORECASE)
_DIGITS_RE = re.compile(r"[0-9]+")
_TOKEN_RE = re.compile(r"\w+|[^\w\s]")


@dataclass
class Mention:
    start: int
    end: int  # exclusive
    entity: str


@dataclass
class Sentence:
    tokens: list
    mentions: list = field(default_factory=list)

    def validate(self):
        n = len(self.tokens)
        prev_end = 0
        for m in sorted(self.mentions, key=lambda m: m.start):
            if not m.entity:
                raise ValueError("mention with empty entity id")
            if not (0 <= m.start < m.end <= n):
                raise ValueError(f"mention span ({m.start}, {m.end}) out of bounds for {n} tokens")
            if m.start < prev_end:
                raise ValueError("overlapping mention spans")
            prev_end = m.end
        return self


@dataclass
class MentionContext:
    """Window around one mention, the mention itself excluded.

    ``left`` and ``right`` are nearest-first: left[0] is the token at
    position -1 relative to the mention, right[0] at position +1. Both
    are padded with PAD_TOKEN to the requested width.
    """

    entity_id: str
    left: list
    right: list


def preprocess_line(raw: str) -> list:
    """Normalize one raw text line into zero or one tokenized Sentence.

    Web links and email addresses become the URL token, maximal ASCII digit
    runs become the number token, and lines whose substituted, whitespace-
    normalized text is shorter than MIN_SENTENCE_CHARS are dropped. Input is
    assumed to hold at most one sentence per line.
    """
    if raw is None:
        return []
    text = _URL_RE.sub(URL_TOKEN, raw)
    text = _DIGITS_RE.sub(NUMBER_TOKEN, text)
    text = " ".join(text.split())
    if len(text) < MIN_SENTENCE_CHARS:
        return []
    tokens = _TOKEN_RE.findall(text)
    if not tokens:
        return []
    return [Sentence(tokens=tokens)]


def _units(sentence: Sentence, kb):
    """Collapse each kb-resolvable mention to a single unit.

    Returns (units, mention_positions) where units is a list of
    (token, entity_or_None) and mention_positions indexes the units that
    are mentions. Mentions of unknown entities stay as surface words.
    """
    mentions = sorted(sentence.mentions, key=lambda m: m.start)
    units = []
    mention_positions = []
    pos = 0
    for m in mentions:
        for i in range(pos, m.start):
            units.append((sentence.tokens[i], None))
        if m.entity in kb:
            mention_positions.append(len(units))
            units.append((None, m.entity))
        else:
            for i in range(m.start, m.end):
                units.append((sentence.tokens[i], None))
        pos = m.end
    for i in range(pos, len(sentence.tokens)):
        units.append((sentence.tokens[i], None))
    return units, mention_positions


def _unit_token(unit, kb):
    token, entity = unit
    if entity is not None:
        return kb.notable[entity]
    return token


def extract_contexts(sentence: Sentence, kb, k: int, l: int) -> list:
    """One MentionContext per kb-resolvable mention in the sentence.

    Each mention occupies a single window slot regardless of span length.
    Other resolvable mentions inside the window are replaced by their
    notable type; positions past the sentence boundary are PAD.
    """
    if k < 0 or l < 0:
        raise ValueError("window sizes must be non-negative")
    width = max(k, l)
    units, mention_positions = _units(sentence, kb)
    contexts = []
    for p in mention_positions:
        entity = units[p][1]
        left, right = [], []
        for d in range(1, width + 1):
            i = p - d
            left.append(_unit_token(units[i], kb) if i >= 0 else PAD_TOKEN)
            j = p + d
            right.append(_unit_token(units[j], kb) if j < len(units) else PAD_TOKEN)
        contexts.append(MentionContext(entity_id=entity, left=left, right=right))
    return contexts


def rewrite_corpus(sentences, mode: str, kb=None, exclude=()):
    """Rewrite annotated sentences into plain token streams.

    mode "entity-id": every mention span collapses to its entity id token.
    mode "notable-type": sentences mentioning an excluded entity are dropped,
    then each kb-resolvable mention span collapses to its notable type token
    (mentions of unknown entities keep their surface tokens).

    Yields one token list per surviving sentence, in input order.
    """
    if mode not in ("entity-id", "notable-type"):
        raise ValueError(f"unknown rewrite mode {mode!r}")
    if mode == "notable-type" and kb is None:
        raise ValueError("notable-type rewrite requires a knowledge base")
    exclude = set(exclude)
    for sentence in sentences:
        mentions = sorted(sentence.mentions, key=lambda m: m.start)
        if mode == "notable-type" and any(m.entity in exclude for m in mentions):
            continue
        out = []
        pos = 0
        for m in mentions:
            out.extend(sentence.tokens[pos : m.start])
            if mode == "entity-id":
                out.append(m.entity)
            elif m.entity in kb:
                out.append(kb.notable[m.entity])
            else:
                out.extend(sentence.tokens[m.start : m.end])
            pos = m.end
        out.extend(sentence.tokens[pos:])
        yield out


def sentence_to_json(sentence: Sentence) -> str:
    return json.dumps(
        {
            "tokens": sentence.tokens,
            "mentions": [
                {"start": m.start, "end": m.end, "entity": m.entity} for m in sentence.mentions
            ],
        },
        ensure_ascii=False,
    )


def sentence_from_json(line: str) -> Sentence:
    obj = json.loads(line)
    mentions = [Mention(m["start"], m["end"], m["entity"]) for m in obj.get("mentions", [])]
    return Sentence(tokens=obj["tokens"], mentions=mentions).validate()


def read_corpus(path):
    """Iterate Sentences from a JSONL corpus file."""
    with open(path, encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if line:
                yield sentence_from_json(line)


def write_corpus(sentences, path):
    with open(path, "w", encoding="utf-8") as f:
        for s in sentences:
            f.write(sentence_to_json(s) + "\n")


def entity_mention_counts(sentences) -> dict:
    """Corpus frequency of each entity (number of mentions)."""
    counts = {}
    for s in sentences:
        for m in s.mentions:
            counts[m.entity] = counts.get(m.entity, 0) + 1
    return counts
