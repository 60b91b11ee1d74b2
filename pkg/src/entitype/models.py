"""Entity-type scorers and the distant-supervision machinery feeding them.

Four score sources share one ScoreMatrix shape: the global model (one MLP
decision per entity from its embedding), the context model (an MLP over
windowed context features, aggregated across an entity's mentions), their
joint sum, and the most-frequent-type baseline.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator

from .corpus import extract_contexts
from .kb import KnowledgeBase
from .neural import MultiLabelMLP

logger = logging.getLogger(__name__)

AGGREGATES = ("mean", "median", "max")


# ---------------------------------------------------------------------------
# context features


def featurize_contexts(contexts, table, k, l):
    """Stack context feature vectors for a list of MentionContexts.

    The feature vector concatenates the embeddings of the k nearest tokens
    on each side, ordered [-k .. -1, +1 .. +k], followed by the average of
    the embeddings of the 2l nearest tokens. PAD and out-of-vocabulary
    positions contribute zero vectors to the concatenation and are excluded
    from the average's divisor; an all-PAD neighborhood averages to zero.
    Output is (len(contexts), (2k+1)*dim) float32.
    """
    d = table.dim
    m = len(contexts)
    width = max(k, l)
    if m == 0:
        return np.zeros((0, (2 * k + 1) * d), dtype=np.float32)
    for ctx in contexts:
        if len(ctx.left) < width or len(ctx.right) < width:
            raise ValueError(f"context narrower than max(k, l) = {width}")

    flat = []
    for ctx in contexts:
        flat.extend(ctx.left[:width])
        flat.extend(ctx.right[:width])
    ids = table.token_ids(flat).reshape(m, 2 * width)
    left_ids, right_ids = ids[:, :width], ids[:, width:]

    # sentinel row of zeros for PAD/OOV
    vectors = np.vstack([table.vectors, np.zeros((1, d), dtype=table.vectors.dtype)])
    sentinel = len(table.vectors)
    left_ids = np.where(left_ids < 0, sentinel, left_ids)
    right_ids = np.where(right_ids < 0, sentinel, right_ids)

    blocks = []
    if k:
        blocks.append(vectors[left_ids[:, :k][:, ::-1]].reshape(m, k * d))
        blocks.append(vectors[right_ids[:, :k]].reshape(m, k * d))
    neighbor_ids = np.concatenate([left_ids[:, :l], right_ids[:, :l]], axis=1)
    valid = (neighbor_ids != sentinel).sum(axis=1)
    total = vectors[neighbor_ids].sum(axis=1)
    avg = np.zeros((m, d), dtype=np.float32)
    nonzero = valid > 0
    avg[nonzero] = total[nonzero] / valid[nonzero, None]
    blocks.append(avg)
    return np.concatenate(blocks, axis=1, dtype=np.float32)


def context_features(ctx, table, k, l):
    """Feature vector for a single MentionContext."""
    return featurize_contexts([ctx], table, k, l)[0]


def truncate_features(features, k_built, k, dim):
    """Slice a (2*k_built+1)*dim feature matrix down to window k <= k_built.

    The averaged block depends only on l, so it carries over unchanged.
    """
    if k > k_built:
        raise ValueError(f"k={k} exceeds the built window k={k_built}")
    if k == k_built:
        return features
    left = features[:, (k_built - k) * dim : k_built * dim]
    right = features[:, k_built * dim : (k_built + k) * dim]
    avg = features[:, 2 * k_built * dim :]
    return np.concatenate([left, right, avg], axis=1)


# ---------------------------------------------------------------------------
# distant-supervision datasets


@dataclass
class ContextExamples:
    """Featurized mention contexts with multi-hot type labels."""

    features: np.ndarray  # (m, n) float32
    labels: np.ndarray  # (m, num_types) uint8
    entity_ids: np.ndarray  # (m,) unicode

    def __len__(self):
        return len(self.entity_ids)

    def select(self, indices):
        idx = np.asarray(indices, dtype=np.int64)
        return ContextExamples(self.features[idx], self.labels[idx], self.entity_ids[idx])

    def by_entity(self):
        groups = {}
        for i, e in enumerate(self.entity_ids):
            groups.setdefault(e, []).append(i)
        return groups

    def save(self, path):
        np.savez(path, features=self.features, labels=self.labels,
                 entity_ids=self.entity_ids)

    @classmethod
    def load(cls, path):
        with np.load(path, allow_pickle=False) as data:
            return cls(data["features"], data["labels"], data["entity_ids"])


def build_distant_dataset(sentences, kb: KnowledgeBase, split_name, table, k, l,
                          batch=50_000) -> ContextExamples:
    """Featurized, distantly labeled contexts for one entity split.

    Every mention of an entity in the split yields one example carrying all
    of that entity's types as positive labels.
    """
    wanted = set(kb.entities_in_split(split_name))
    pending, feats, label_rows, ids = [], [], [], []

    def flush():
        if pending:
            feats.append(featurize_contexts(pending, table, k, l))
            pending.clear()

    for sentence in sentences:
        for ctx in extract_contexts(sentence, kb, k, l):
            if ctx.entity_id not in wanted:
                continue
            pending.append(ctx)
            label_rows.append(kb.membership_row(ctx.entity_id))
            ids.append(ctx.entity_id)
            if len(pending) >= batch:
                flush()
    flush()

    n = (2 * k + 1) * table.dim
    features = np.concatenate(feats, axis=0) if feats else np.zeros((0, n), dtype=np.float32)
    labels = (np.stack(label_rows).astype(np.uint8) if label_rows
              else np.zeros((0, len(kb.types)), dtype=np.uint8))
    return ContextExamples(features, labels, np.array(ids, dtype=str))


# ---------------------------------------------------------------------------
# context sampling


def sample_train_contexts(examples: ContextExamples, kb: KnowledgeBase,
                          min_per_type=10_000, max_per_type=20_000, seed=0):
    """Downsample training contexts per notable type.

    The candidate pool for type t holds the contexts of entities whose
    notable type is t. Pools at or below ``min_per_type`` are kept whole.
    Larger pools are cut to clamp(round(min_per_type * n_t / median(n)),
    min_per_type, max_per_type), where n_t is the number of training
    entities notable for t and the median runs over types with any training
    entity. Contexts are taken entity by entity, entities with fewer
    distinct types first (ties broken by a seeded shuffle), keeping corpus
    order within an entity.
    """
    if min_per_type > max_per_type:
        raise ValueError("min_per_type must be <= max_per_type")
    train_entities = kb.entities_in_split("train")
    notable_counts = {}
    for e in train_entities:
        t = kb.notable[e]
        notable_counts[t] = notable_counts.get(t, 0) + 1
    positive = sorted(notable_counts.values())
    median_n = float(np.median(positive)) if positive else 1.0

    rng = np.random.default_rng(seed)
    entity_order = sorted(set(examples.entity_ids))
    priority = dict(zip(entity_order, rng.permutation(len(entity_order))))

    by_entity = examples.by_entity()
    pools = {}
    for e, idx in by_entity.items():
        pools.setdefault(kb.notable[e], []).append(e)

    selected = []
    report = {}
    for t in kb.types:
        entities = pools.get(t, [])
        pool_size = sum(len(by_entity[e]) for e in entities)
        if pool_size <= min_per_type:
            take = pool_size
        else:
            n_t = notable_counts.get(t, 0)
            quota = int(round(min_per_type * n_t / median_n))
            take = min(max(quota, min_per_type), max_per_type)
        entities.sort(key=lambda e: (int(np.sum(kb.membership_row(e))), priority[e]))
        kept = 0
        for e in entities:
            if kept >= take:
                break
            idx = by_entity[e][: take - kept]
            selected.extend(idx)
            kept += len(idx)
        report[t] = {"pool": pool_size, "kept": kept}
    return examples.select(selected), report


def sample_eval_contexts(examples: ContextExamples, per_entity, seed=0):
    """Uniform without-replacement cap of contexts per entity."""
    if per_entity < 1:
        raise ValueError("per_entity quota must be >= 1")
    rng = np.random.default_rng(seed)
    selected = []
    for e in sorted(set(examples.entity_ids)):
        idx = np.flatnonzero(examples.entity_ids == e)
        if len(idx) > per_entity:
            idx = np.sort(rng.choice(idx, size=per_entity, replace=False))
        selected.extend(idx.tolist())
    return examples.select(selected)


# ---------------------------------------------------------------------------
# score matrices


@dataclass
class ScoreMatrix:
    """Dense (entity, type) scores from one model.

    ``missing`` records entities that were requested but could not be
    scored (no embedding / no contexts) and the reason; they have no row.
    """

    entity_ids: list
    types: list
    values: np.ndarray  # (E, T) float64
    provenance: str
    missing: dict = field(default_factory=dict)

    def __post_init__(self):
        self._row_index = {e: i for i, e in enumerate(self.entity_ids)}

    def row(self, entity_id):
        return self.values[self._row_index[entity_id]]

    def __contains__(self, entity_id):
        return entity_id in self._row_index

    def save_tsv(self, path):
        """Rows ordered by entity id then type ordinal."""
        with open(path, "w", encoding="utf-8") as f:
            for e in sorted(self.entity_ids):
                row = self.row(e)
                for j, t in enumerate(self.types):
                    f.write(f"{e}\t{t}\t{row[j]:.10g}\n")

    @classmethod
    def load_tsv(cls, path, provenance=""):
        entities, types, rows = [], [], []
        current, current_row = None, None
        with open(path, encoding="utf-8") as f:
            for lineno, line in enumerate(f, start=1):
                parts = line.rstrip("\n").split("\t")
                if len(parts) != 3:
                    raise ValueError(f"{path}:{lineno}: expected 3 tab-separated fields")
                e, t, score = parts
                if e != current:
                    current = e
                    current_row = []
                    entities.append(e)
                    rows.append(current_row)
                if len(entities) == 1:
                    types.append(t)
                current_row.append(float(score))
        values = np.array(rows, dtype=np.float64)
        if values.size and values.shape[1] != len(types):
            raise ValueError(f"{path}: ragged rows")
        return cls(entities, types, values, provenance)


class GlobalModel(BaseEstimator):
    """Types from a single per-entity embedding, via the shared-layer MLP."""

    def __init__(self, hidden_size=200, learning_rate=0.1, adagrad_epsilon=1e-8,
                 batch_size=128, max_epochs=100, patience=3, seed=0,
                 early_stop_metric="loss"):
        self.hidden_size = hidden_size
        self.learning_rate = learning_rate
        self.adagrad_epsilon = adagrad_epsilon
        self.batch_size = batch_size
        self.max_epochs = max_epochs
        self.patience = patience
        self.seed = seed
        self.early_stop_metric = early_stop_metric

    def _split_matrix(self, table, kb, split_name):
        kept, skipped = [], []
        for e in kb.entities_in_split(split_name):
            (kept if e in table else skipped).append(e)
        X = np.stack([table.lookup(e) for e in kept]) if kept else None
        Y = np.stack([kb.membership_row(e) for e in kept]) if kept else None
        return X, Y, kept, skipped

    def fit(self, table, kb: KnowledgeBase):
        X, Y, _, skipped_train = self._split_matrix(table, kb, "train")
        X_dev, Y_dev, _, skipped_dev = self._split_matrix(table, kb, "dev")
        if X is None or X_dev is None:
            raise ValueError("no train or dev entities have embeddings")
        self.skipped_ = {"train": skipped_train, "dev": skipped_dev}
        if skipped_train or skipped_dev:
            logger.info("global model: skipped %d train / %d dev entities without embeddings",
                        len(skipped_train), len(skipped_dev))
        self.mlp_ = MultiLabelMLP(**self.get_params()).fit(X, Y, X_dev, Y_dev)
        return self

    def score_entities(self, table, kb: KnowledgeBase, entities) -> ScoreMatrix:
        kept = [e for e in entities if e in table]
        missing = {e: "no embedding" for e in entities if e not in table}
        if kept:
            X = np.stack([table.lookup(e) for e in kept])
            values = self.mlp_.forward(X)
        else:
            values = np.zeros((0, len(kb.types)), dtype=np.float64)
        return ScoreMatrix(kept, list(kb.types.types), values, "gm", missing)


class ContextModel(BaseEstimator):
    """Per-context type scores, aggregated over each entity's mentions."""

    def __init__(self, hidden_size=300, learning_rate=0.1, adagrad_epsilon=1e-8,
                 batch_size=128, max_epochs=100, patience=3, seed=0,
                 early_stop_metric="loss", aggregate="mean"):
        self.hidden_size = hidden_size
        self.learning_rate = learning_rate
        self.adagrad_epsilon = adagrad_epsilon
        self.batch_size = batch_size
        self.max_epochs = max_epochs
        self.patience = patience
        self.seed = seed
        self.early_stop_metric = early_stop_metric
        self.aggregate = aggregate

    def fit(self, train: ContextExamples, dev: ContextExamples):
        params = {k: v for k, v in self.get_params().items() if k != "aggregate"}
        self.mlp_ = MultiLabelMLP(**params).fit(
            train.features, train.labels, dev.features, dev.labels)
        return self

    def score_contexts(self, features):
        """Per-context probabilities, shape (m, num_types)."""
        return self.mlp_.forward(features)

    def score_entities(self, examples: ContextExamples, types, entities) -> ScoreMatrix:
        scores = (self.score_contexts(examples.features) if len(examples)
                  else np.zeros((0, len(types))))
        return aggregate_context_scores(scores, examples.entity_ids, types,
                                        entities, self.aggregate)


def aggregate_context_scores(context_scores, entity_ids, types, entities,
                             aggregate="mean") -> ScoreMatrix:
    """Summarize per-context scores into one row per entity.

    Entities with no scored context are flagged in ``missing`` rather than
    given a silent zero row.
    """
    if aggregate not in AGGREGATES:
        raise ValueError(f"unknown aggregate {aggregate!r}")
    fn = {"mean": np.mean, "median": np.median, "max": np.max}[aggregate]
    groups = {}
    for i, e in enumerate(entity_ids):
        groups.setdefault(e, []).append(i)
    kept, rows, missing = [], [], {}
    for e in entities:
        idx = groups.get(e)
        if not idx:
            missing[e] = "no contexts"
            continue
        kept.append(e)
        rows.append(fn(np.asarray(context_scores)[idx], axis=0))
    values = np.stack(rows) if rows else np.zeros((0, len(types)))
    return ScoreMatrix(kept, list(types), values, "cm", missing)


def joint_scores(gm: ScoreMatrix, cm: ScoreMatrix) -> ScoreMatrix:
    """Element-wise sum of the two models' scores.

    Entities scored by only one model fall back to that model's row; the
    fallback is logged. Entities scored by neither stay missing.
    """
    if list(gm.types) != list(cm.types):
        raise ValueError("score matrices cover different type inventories")
    universe = sorted(set(gm.entity_ids) | set(cm.entity_ids)
                      | set(gm.missing) | set(cm.missing))
    kept, rows, missing = [], [], {}
    fallbacks = 0
    for e in universe:
        in_gm, in_cm = e in gm, e in cm
        if in_gm and in_cm:
            rows.append(gm.row(e) + cm.row(e))
        elif in_gm or in_cm:
            rows.append((gm if in_gm else cm).row(e).copy())
            fallbacks += 1
        else:
            missing[e] = "missing from both models"
            continue
        kept.append(e)
    if fallbacks:
        logger.info("joint model: %d entities scored by a single model", fallbacks)
    values = np.stack(rows) if rows else np.zeros((0, len(gm.types)))
    return ScoreMatrix(kept, list(gm.types), values, "jm", missing)


def mft_scores(kb: KnowledgeBase, entities) -> ScoreMatrix:
    """Most-frequent-type baseline: every entity gets the same row of
    train-membership counts."""
    train = kb.entities_in_split("train")
    if not train:
        raise ValueError("train split is empty")
    counts = np.zeros(len(kb.types), dtype=np.float64)
    for e in train:
        counts += kb.membership_row(e)
    entities = list(entities)
    values = np.tile(counts, (len(entities), 1))
    return ScoreMatrix(entities, list(kb.types.types), values, "mft")
