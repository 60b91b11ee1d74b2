"""Ranking and classification metrics with per-type threshold selection.

Ranking: precision at 1 and the breakeven point of the pooled
(entity, type) ranking. Classification: per-type thresholds picked on dev
to maximize that type's F1, then strict accuracy, micro F1, entity-macro
F1 and type-macro F1 on test, each recomputable on head/tail slices.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .models import ScoreMatrix

SCHEMA_VERSION = 1

DEFAULT_SLICES = {
    "head_entity_min_freq": 100,  # head entities: corpus frequency > this
    "tail_entity_max_freq": 5,  # tail entities: corpus frequency < this
    "head_type_min_train": 3000,  # head types: more train entities than this
    "tail_type_max_train": 200,  # tail types: fewer train entities than this
}

RANKING_METRICS = ("p_at_1", "bep")
CLASSIFICATION_METRICS = ("accuracy", "micro_f1", "entity_macro_f1", "type_macro_f1")


def _f1(tp, fp, fn):
    denom = 2 * tp + fp + fn
    return 2.0 * tp / denom if denom else 0.0


def _gold_matrix(matrix: ScoreMatrix, kb, entities):
    cols = [kb.types.index[t] for t in matrix.types]
    rows = [kb.membership_row(e)[cols].astype(bool) for e in entities]
    return np.stack(rows) if rows else np.zeros((0, len(cols)), dtype=bool)


def _require_rows(matrix, entities):
    absent = [e for e in entities if e not in matrix]
    if absent:
        raise ValueError(f"entities without score rows: {absent[:5]}"
                         + ("..." if len(absent) > 5 else ""))


def precision_at_1(matrix: ScoreMatrix, kb, entities):
    """Fraction of entities whose top-scored type (ties broken by type
    ordinal) is one of their gold types."""
    entities = list(entities)
    if not entities:
        raise ValueError("empty entity set")
    _require_rows(matrix, entities)
    gold = _gold_matrix(matrix, kb, entities)
    correct = 0
    for i, e in enumerate(entities):
        if gold[i, int(np.argmax(matrix.row(e)))]:
            correct += 1
    return correct / len(entities)


def breakeven_point(matrix: ScoreMatrix, kb, entities):
    """F1 at the pooled-ranking cutoff where precision equals recall.

    All (entity, type) pairs are ranked by descending score (ties broken by
    entity order, then type ordinal). Cutoffs where precision and recall are
    both zero are not counted as a crossing; if no crossing exists, the
    earliest cutoff minimizing |precision - recall| is used.
    """
    entities = list(entities)
    if not entities:
        raise ValueError("empty entity set")
    _require_rows(matrix, entities)
    gold = _gold_matrix(matrix, kb, entities)
    total_gold = int(gold.sum())
    if total_gold == 0:
        raise ValueError("no gold (entity, type) pairs")
    values = np.stack([matrix.row(e) for e in entities])
    n_ent, n_typ = values.shape
    scores = values.ravel()
    e_idx = np.repeat(np.arange(n_ent), n_typ)
    t_idx = np.tile(np.arange(n_typ), n_ent)
    order = np.lexsort((t_idx, e_idx, -scores))
    flags = gold.ravel()[order]
    tp = np.cumsum(flags)
    cut = np.arange(1, flags.size + 1, dtype=np.float64)
    precision = tp / cut
    recall = tp / total_gold
    crossing = np.flatnonzero((precision == recall) & (tp > 0))
    if crossing.size:
        i = int(crossing[0])
    else:
        i = int(np.argmin(np.abs(precision - recall)))
    p, r = float(precision[i]), float(recall[i])
    return 2.0 * p * r / (p + r) if p + r else 0.0


def select_thresholds(matrix: ScoreMatrix, kb, types=None):
    """Per-type threshold maximizing dev F1 of {e : S(e,t) >= threshold}.

    Candidates are the midpoints between consecutive distinct dev scores
    plus a below-min and an above-max sentinel; ties prefer the higher
    threshold. Types with no positive dev entity get +inf (never assign).
    """
    types = list(types) if types is not None else list(matrix.types)
    entities = list(matrix.entity_ids)
    gold = _gold_matrix(matrix, kb, entities)
    values = np.stack([matrix.row(e) for e in entities]) if entities else None
    thresholds = {}
    for t in types:
        j = matrix.types.index(t)
        scores = values[:, j] if entities else np.zeros(0)
        positives = gold[:, j] if entities else np.zeros(0, dtype=bool)
        thresholds[t] = _best_threshold(scores, positives)[0]
    return thresholds


def _best_threshold(scores, positives):
    n_pos = int(positives.sum())
    if n_pos == 0:
        return math.inf, 0.0
    distinct = np.unique(scores)  # ascending
    candidates = [distinct[-1] + 1.0]
    candidates.extend((distinct[i] + distinct[i + 1]) / 2.0
                      for i in range(len(distinct) - 2, -1, -1))
    candidates.append(distinct[0] - 1.0)
    best_thr, best_f1 = None, -1.0
    for thr in candidates:  # descending, so strict > keeps the higher tie
        assigned = scores >= thr
        tp = int((assigned & positives).sum())
        f1 = _f1(tp, int(assigned.sum()) - tp, n_pos - tp)
        if f1 > best_f1:
            best_thr, best_f1 = thr, f1
    return best_thr, best_f1


def classify_and_score(matrix: ScoreMatrix, thresholds, kb, entities):
    """Threshold the scores and compute the four classification measures.

    Per-entity F1 counts 1.0 when both the assigned and gold sets are empty
    and 0.0 when exactly one is. Types with neither gold members nor
    assignments are excluded from the type-macro mean and reported.
    """
    entities = list(entities)
    if not entities:
        raise ValueError("empty entity set")
    _require_rows(matrix, entities)
    for t in matrix.types:
        if t not in thresholds:
            raise ValueError(f"missing threshold for type {t!r}")
    values = np.stack([matrix.row(e) for e in entities])
    thr = np.array([thresholds[t] for t in matrix.types], dtype=np.float64)
    assigned = values >= thr
    gold = _gold_matrix(matrix, kb, entities)
    return _classification_metrics(assigned, gold, list(matrix.types))


def _classification_metrics(assigned, gold, types):
    exact = 0
    entity_f1s = []
    for i in range(assigned.shape[0]):
        a, g = assigned[i], gold[i]
        tp = int((a & g).sum())
        fp = int(a.sum()) - tp
        fn = int(g.sum()) - tp
        if fp == 0 and fn == 0:
            exact += 1
            entity_f1s.append(1.0)  # covers the both-empty case
        elif tp == 0 and (int(a.sum()) == 0 or int(g.sum()) == 0):
            entity_f1s.append(0.0)
        else:
            entity_f1s.append(_f1(tp, fp, fn))
    tp = int((assigned & gold).sum())
    fp = int((assigned & ~gold).sum())
    fn = int((~assigned & gold).sum())
    type_f1s, excluded = [], []
    for j, t in enumerate(types):
        a, g = assigned[:, j], gold[:, j]
        if not a.any() and not g.any():
            excluded.append(t)
            continue
        tpj = int((a & g).sum())
        type_f1s.append(_f1(tpj, int(a.sum()) - tpj, int(g.sum()) - tpj))
    n = assigned.shape[0]
    return {
        "accuracy": exact / n,
        "micro_f1": _f1(tp, fp, fn),
        "entity_macro_f1": sum(entity_f1s) / n,
        "type_macro_f1": sum(type_f1s) / len(type_f1s) if type_f1s else None,
        "excluded_types": excluded,
    }


# ---------------------------------------------------------------------------
# full report


@dataclass
class EvalReport:
    provenance: str
    num_entities: int
    types: list
    thresholds: dict
    slices: dict
    slice_config: dict
    missing_entities: dict = field(default_factory=dict)
    schema_version: int = SCHEMA_VERSION

    @property
    def overall(self):
        return self.slices["all"]

    def to_dict(self):
        thresholds = {t: (None if math.isinf(v) else v) for t, v in self.thresholds.items()}
        return {
            "schema_version": self.schema_version,
            "provenance": self.provenance,
            "num_entities": self.num_entities,
            "types": list(self.types),
            "thresholds": thresholds,
            "never_assigned_types": sorted(t for t, v in self.thresholds.items()
                                           if math.isinf(v)),
            "slices": self.slices,
            "slice_config": self.slice_config,
            "missing_entities": {
                "count": len(self.missing_entities),
                "reasons": dict(sorted(self.missing_entities.items())),
            },
        }

    def save(self, path):
        with open(path, "w", encoding="utf-8") as f:
            json.dump(self.to_dict(), f, indent=2, sort_keys=True)
            f.write("\n")


def _entity_slice_metrics(matrix, thresholds, kb, entities):
    if not entities:
        return {"size": 0, "p_at_1": None, "bep": None, "accuracy": None,
                "micro_f1": None, "entity_macro_f1": None, "type_macro_f1": None,
                "excluded_types": []}
    out = {"size": len(entities)}
    out["p_at_1"] = precision_at_1(matrix, kb, entities)
    out["bep"] = breakeven_point(matrix, kb, entities)
    out.update(classify_and_score(matrix, thresholds, kb, entities))
    return out


def _type_train_counts(kb):
    train = kb.entities_in_split("train")
    counts = np.zeros(len(kb.types), dtype=np.int64)
    for e in train:
        counts += kb.membership_row(e)
    return {t: int(counts[j]) for j, t in enumerate(kb.types.types)}


def evaluate_model(dev_matrix: ScoreMatrix, test_matrix: ScoreMatrix, kb,
                   entity_freqs, requested_entities=None, slice_config=None,
                   allow_overlap=False) -> EvalReport:
    """Select thresholds on dev, score test, and report with slices.

    ``entity_freqs`` maps entity id to corpus mention count (for the
    head/tail entity slices). ``requested_entities`` lets callers pass the
    full test split so unscored entities are reported as missing.
    """
    cfg = dict(DEFAULT_SLICES)
    if slice_config:
        cfg.update(slice_config)
    overlap = set(dev_matrix.entity_ids) & set(test_matrix.entity_ids)
    if overlap and not allow_overlap:
        raise ValueError(f"dev and test entity sets intersect ({len(overlap)} entities)")

    thresholds = select_thresholds(dev_matrix, kb)
    scored = list(test_matrix.entity_ids)
    missing = dict(test_matrix.missing)
    if requested_entities is not None:
        requested = list(requested_entities)
        scored = [e for e in requested if e in test_matrix]
        for e in requested:
            if e not in test_matrix and e not in missing:
                missing[e] = "no score row"

    slices = {"all": _entity_slice_metrics(test_matrix, thresholds, kb, scored)}

    head = [e for e in scored if entity_freqs.get(e, 0) > cfg["head_entity_min_freq"]]
    tail = [e for e in scored if entity_freqs.get(e, 0) < cfg["tail_entity_max_freq"]]
    slices["head_entities"] = _entity_slice_metrics(test_matrix, thresholds, kb, head)
    slices["tail_entities"] = _entity_slice_metrics(test_matrix, thresholds, kb, tail)

    train_counts = _type_train_counts(kb)
    for name, keep in (
        ("head_types", lambda t: train_counts[t] > cfg["head_type_min_train"]),
        ("tail_types", lambda t: train_counts[t] < cfg["tail_type_max_train"]),
    ):
        kept_types = [t for t in test_matrix.types if keep(t)]
        slices[name] = _type_slice_metrics(test_matrix, thresholds, kb, scored, kept_types)

    return EvalReport(
        provenance=test_matrix.provenance,
        num_entities=len(scored),
        types=list(test_matrix.types),
        thresholds=thresholds,
        slices=slices,
        slice_config=cfg,
        missing_entities=missing,
    )


def _type_slice_metrics(matrix, thresholds, kb, entities, kept_types):
    if not kept_types or not entities:
        return {"size": len(kept_types), "types": kept_types, "type_macro_f1": None,
                "excluded_types": []}
    values = np.stack([matrix.row(e) for e in entities])
    thr = np.array([thresholds[t] for t in matrix.types], dtype=np.float64)
    assigned = values >= thr
    gold = _gold_matrix(matrix, kb, entities)
    cols = [matrix.types.index(t) for t in kept_types]
    stats = _classification_metrics(assigned[:, cols], gold[:, cols], kept_types)
    return {"size": len(kept_types), "types": kept_types,
            "type_macro_f1": stats["type_macro_f1"],
            "excluded_types": stats["excluded_types"]}
