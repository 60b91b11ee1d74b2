"""Synthetic annotated corpora with known entity-type ground truth.

Each entity gets a notable type plus optional extra types; each mention
becomes one sentence whose context words come either from the entity's
type vocabularies (informative) or from a shared background vocabulary.
Type vocabularies are disjoint by construction, so signal strength is
controlled entirely by ``context_informativeness``. With
``positional_signal`` enabled, informative contexts put type words only in
the inner ring of positions, so nearby positions carry more evidence than
the window average.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass

import numpy as np

from .corpus import Mention, Sentence
from .kb import KnowledgeBase, TypeInventory

MENTION_DISTRIBUTIONS = ("poisson", "fixed")


@dataclass(frozen=True)
class SynSpec:
    num_types: int = 8
    entities_per_type: int = 200
    # P(entity has exactly i+1 distinct types)
    types_per_entity: tuple = (0.6, 0.25, 0.15)
    vocab_per_type: int = 40
    background_vocab: int = 80
    context_informativeness: float = 0.7
    mentions_per_entity: float = 50.0
    mentions_distribution: str = "poisson"
    words_per_side: int = 4
    positional_signal: bool = False
    inner_positions: int = 2
    seed: int = 0
    type_vocabularies: tuple | None = None  # optional ((word, ...), ...) per type

    def validate(self):
        if min(self.num_types, self.entities_per_type, self.vocab_per_type,
               self.background_vocab, self.words_per_side) < 1:
            raise ValueError("counts must be positive")
        if not 0.0 <= self.context_informativeness <= 1.0:
            raise ValueError("context_informativeness must be within [0, 1]")
        if not self.types_per_entity or abs(sum(self.types_per_entity) - 1.0) > 1e-9 \
                or min(self.types_per_entity) < 0:
            raise ValueError("types_per_entity must be probabilities summing to 1")
        if len(self.types_per_entity) > self.num_types:
            raise ValueError("types_per_entity allows more types than exist")
        if self.mentions_per_entity <= 0:
            raise ValueError("mentions_per_entity must be positive")
        if self.mentions_distribution not in MENTION_DISTRIBUTIONS:
            raise ValueError(f"unknown mentions_distribution {self.mentions_distribution!r}")
        if not 1 <= self.inner_positions <= self.words_per_side:
            raise ValueError("inner_positions must be within 1..words_per_side")
        if self.type_vocabularies is not None:
            if len(self.type_vocabularies) != self.num_types:
                raise ValueError("type_vocabularies must cover every type")
            seen = {}
            for i, words in enumerate(self.type_vocabularies):
                for w in words:
                    if w in seen:
                        raise ValueError(
                            f"vocabulary collision: {w!r} in types {seen[w]} and {i}")
                    seen[w] = i
        return self

    def type_names(self):
        return [f"t{i:02d}" for i in range(self.num_types)]

    def type_vocab(self, type_index):
        if self.type_vocabularies is not None:
            return list(self.type_vocabularies[type_index])
        return [f"w{type_index:02d}_{j:03d}" for j in range(self.vocab_per_type)]

    def background(self):
        return [f"bg{j:03d}" for j in range(self.background_vocab)]


def _context_words(spec, rng, type_indices, vocabs, background, informative):
    """Word tokens for one side-agnostic window, nearest position first."""
    out_left, out_right = [], []
    for side in (out_left, out_right):
        for distance in range(1, spec.words_per_side + 1):
            if not informative:
                side.append(background[rng.integers(0, len(background))])
            elif spec.positional_signal and distance > spec.inner_positions:
                side.append(background[rng.integers(0, len(background))])
            else:
                t = type_indices[rng.integers(0, len(type_indices))]
                side.append(vocabs[t][rng.integers(0, len(vocabs[t]))])
    return out_left, out_right


def generate(spec: SynSpec):
    """Build (sentences, knowledge base) from the spec, deterministically."""
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    type_names = spec.type_names()
    vocabs = [spec.type_vocab(i) for i in range(spec.num_types)]
    background = spec.background()

    n_entities = spec.num_types * spec.entities_per_type
    entity_ids = [f"e{i:05d}" for i in range(n_entities)]
    notable = {}
    membership = np.zeros((n_entities, spec.num_types), dtype=np.uint8)
    entity_types = []
    extra_weights = np.asarray(spec.types_per_entity)
    for i, eid in enumerate(entity_ids):
        base = i % spec.num_types
        notable[eid] = type_names[base]
        n_types = 1 + int(rng.choice(len(extra_weights), p=extra_weights))
        others = [t for t in range(spec.num_types) if t != base]
        extras = rng.choice(others, size=n_types - 1, replace=False) if n_types > 1 else []
        mine = [base, *sorted(int(t) for t in extras)]
        membership[i, mine] = 1
        entity_types.append(mine)

    kb = KnowledgeBase(TypeInventory(type_names), entity_ids, membership, notable)
    kb.validate()

    sentences = []
    for i, eid in enumerate(entity_ids):
        if spec.mentions_distribution == "poisson":
            n_mentions = max(1, int(rng.poisson(spec.mentions_per_entity)))
        else:
            n_mentions = int(spec.mentions_per_entity)
        for _ in range(n_mentions):
            informative = rng.random() < spec.context_informativeness
            left, right = _context_words(spec, rng, entity_types[i], vocabs,
                                         background, informative)
            tokens = left[::-1] + [eid] + right
            pos = spec.words_per_side
            sentences.append(Sentence(tokens, [Mention(pos, pos + 1, eid)]))
    order = rng.permutation(len(sentences))
    return [sentences[j] for j in order], kb


def plant_rare_signal(sentences, spec: SynSpec, entity_id, rare_type, count,
                      seed=None):
    """Append informative contexts of ``rare_type`` for one entity.

    Models an entity dominated by another type that still has a few
    reliable contexts of a rarer one. Returns a new sentence list; the
    input corpus is untouched.
    """
    type_names = spec.type_names()
    if rare_type not in type_names:
        raise ValueError(f"rare type {rare_type!r} has no vocabulary in the spec")
    if count < 0:
        raise ValueError("count must be >= 0")
    out = list(sentences)
    if count == 0:
        return out
    if not any(m.entity == entity_id for s in sentences for m in s.mentions):
        raise ValueError(f"entity {entity_id!r} does not occur in the corpus")
    if seed is None:
        seed = (spec.seed + zlib.crc32(f"{entity_id}:{rare_type}".encode())) % 2**32
    rng = np.random.default_rng(seed)
    vocabs = [spec.type_vocab(i) for i in range(spec.num_types)]
    rare_index = type_names.index(rare_type)
    for _ in range(count):
        left, right = _context_words(spec, rng, [rare_index], vocabs,
                                     spec.background(), informative=True)
        tokens = left[::-1] + [entity_id] + right
        pos = spec.words_per_side
        out.append(Sentence(tokens, [Mention(pos, pos + 1, entity_id)]))
    return out
