"""Corpus-level fine-grained entity typing from distantly supervised text."""

__version__ = "0.1.0"

from .corpus import (  # noqa: F401
    PAD_TOKEN,
    Mention,
    MentionContext,
    Sentence,
    extract_contexts,
    preprocess_line,
    read_corpus,
    rewrite_corpus,
    write_corpus,
)
from .embeddings import EmbeddingTable, SkipgramModel  # noqa: F401
from .kb import KnowledgeBase, TypeInventory, load_kb, save_kb, split_entities  # noqa: F401
