"""Knowledge base: entity and type inventories, membership, notable types, splits.

File formats:
  * type file: one type id per line, UTF-8.
  * entity file: TSV ``entity_id \\t notable_type \\t comma_separated_types``
    with an optional fourth column holding the split name once a split has
    been assigned. No header.
"""

from __future__ import annotations

import statistics
from dataclasses import dataclass, field

import numpy as np

SPLIT_NAMES = ("train", "dev", "test")

# Reserved by the context extractor; ids equal to it would collide with padding.
RESERVED_TOKENS = ("<PAD>",)


def _check_identifier(kind, value):
    if not value:
        raise ValueError(f"empty {kind} id")
    if any(c.isspace() for c in value) or "," in value:
        raise ValueError(f"{kind} id {value!r} contains whitespace or comma")
    if value in RESERVED_TOKENS:
        raise ValueError(f"{kind} id {value!r} is a reserved token")


class TypeInventory:
    """Ordered set of type identifiers with a stable ordinal for each."""

    def __init__(self, types):
        self.types = list(types)
        self.index = {}
        for i, t in enumerate(self.types):
            _check_identifier("type", t)
            if t in self.index:
                raise ValueError(f"duplicate type id {t!r}")
            self.index[t] = i

    def __len__(self):
        return len(self.types)

    def __iter__(self):
        return iter(self.types)

    def __contains__(self, t):
        return t in self.index

    def __eq__(self, other):
        return isinstance(other, TypeInventory) and self.types == other.types


@dataclass
class KnowledgeBase:
    """Entities with binary type membership, one notable type each, and an
    optional train/dev/test split.

    ``membership`` is a dense uint8 matrix indexed (entity ordinal, type
    ordinal); entity ordinals follow ``entity_ids`` order. The split is None
    until assigned by :func:`split_entities` (or read from a 4-column file).
    Instances are treated as immutable after load.
    """

    types: TypeInventory
    entity_ids: list
    membership: np.ndarray
    notable: dict
    split: dict | None = None
    _entity_index: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if not self._entity_index:
            self._entity_index = {e: i for i, e in enumerate(self.entity_ids)}

    def __contains__(self, entity_id):
        return entity_id in self._entity_index

    @property
    def num_entities(self):
        return len(self.entity_ids)

    def type_set(self, entity_id):
        """Set of type ids the entity is a member of."""
        row = self.membership[self._entity_index[entity_id]]
        return {self.types.types[j] for j in np.flatnonzero(row)}

    def membership_row(self, entity_id):
        return self.membership[self._entity_index[entity_id]]

    def entities_in_split(self, name):
        if self.split is None:
            raise ValueError("knowledge base has no split assigned")
        if name not in SPLIT_NAMES:
            raise ValueError(f"unknown split {name!r}")
        return [e for e in self.entity_ids if self.split[e] == name]

    def validate(self):
        """Raise ValueError on any invariant violation."""
        if self.membership.shape != (len(self.entity_ids), len(self.types)):
            raise ValueError("membership shape does not match inventories")
        if not np.isin(self.membership, (0, 1)).all():
            raise ValueError("membership values must be 0 or 1")
        if len(self._entity_index) != len(self.entity_ids):
            raise ValueError("duplicate entity ids")
        for i, e in enumerate(self.entity_ids):
            row = self.membership[i]
            if row.sum() < 1:
                raise ValueError(f"entity {e!r} has no types")
            notable = self.notable.get(e)
            if notable is None or notable not in self.types:
                raise ValueError(f"entity {e!r} has invalid notable type {notable!r}")
            if row[self.types.index[notable]] != 1:
                raise ValueError(f"entity {e!r} is not a member of its notable type")
        if self.split is not None:
            if set(self.split) != set(self.entity_ids):
                raise ValueError("split does not cover exactly the entity set")
            bad = {s for s in self.split.values()} - set(SPLIT_NAMES)
            if bad:
                raise ValueError(f"unknown split names {sorted(bad)}")
        return self

    def describe_split(self):
        """Per-split entity counts plus mean/median distinct types per entity."""
        out = {}
        for name in SPLIT_NAMES:
            ents = self.entities_in_split(name)
            counts = [int(self.membership_row(e).sum()) for e in ents]
            out[name] = {
                "entities": len(ents),
                "mean_types": statistics.mean(counts) if counts else None,
                "median_types": statistics.median(counts) if counts else None,
            }
        return out


def load_types(path):
    with open(path, encoding="utf-8") as f:
        types = [line.rstrip("\n") for line in f if line.strip()]
    return TypeInventory(types)


def load_kb(entity_file, type_file) -> KnowledgeBase:
    """Load a knowledge base from the entity TSV and type listing."""
    types = load_types(type_file)
    entity_ids, notable, split = [], {}, {}
    rows = []
    with open(entity_file, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            fields = line.split("\t")
            if len(fields) not in (3, 4):
                raise ValueError(f"{entity_file}:{lineno}: expected 3 or 4 tab-separated fields")
            eid, notable_type, type_list = fields[0], fields[1], fields[2]
            _check_identifier("entity", eid)
            if eid in notable:
                raise ValueError(f"{entity_file}:{lineno}: duplicate entity id {eid!r}")
            member_types = [t for t in type_list.split(",") if t]
            if not member_types:
                raise ValueError(f"{entity_file}:{lineno}: entity {eid!r} has no types")
            for t in member_types:
                if t not in types:
                    raise ValueError(f"{entity_file}:{lineno}: unknown type {t!r}")
            if notable_type not in member_types:
                raise ValueError(
                    f"{entity_file}:{lineno}: notable type {notable_type!r} missing "
                    f"from type list of {eid!r}"
                )
            entity_ids.append(eid)
            notable[eid] = notable_type
            rows.append([types.index[t] for t in member_types])
            if len(fields) == 4:
                if fields[3] not in SPLIT_NAMES:
                    raise ValueError(f"{entity_file}:{lineno}: unknown split {fields[3]!r}")
                split[eid] = fields[3]
    if split and len(split) != len(entity_ids):
        raise ValueError("split column present for some entities but not all")
    membership = np.zeros((len(entity_ids), len(types)), dtype=np.uint8)
    for i, type_ids in enumerate(rows):
        membership[i, type_ids] = 1
    kb = KnowledgeBase(types, entity_ids, membership, notable, split or None)
    return kb.validate()


def save_types(types: TypeInventory, path):
    with open(path, "w", encoding="utf-8") as f:
        for t in types:
            f.write(t + "\n")


def save_entities(kb: KnowledgeBase, path):
    with open(path, "w", encoding="utf-8") as f:
        for i, e in enumerate(kb.entity_ids):
            members = [kb.types.types[j] for j in np.flatnonzero(kb.membership[i])]
            fields = [e, kb.notable[e], ",".join(members)]
            if kb.split is not None:
                fields.append(kb.split[e])
            f.write("\t".join(fields) + "\n")


def save_kb(kb: KnowledgeBase, entity_file, type_file):
    """Write the entity TSV and type listing; inverse of :func:`load_kb`."""
    save_types(kb.types, type_file)
    save_entities(kb, entity_file)


def split_entities(kb: KnowledgeBase, ratios, seed) -> KnowledgeBase:
    """Assign a train/dev/test split by seeded shuffle.

    Split sizes follow the largest-remainder rule, so each is within one
    entity of the exact proportion. Returns a new KnowledgeBase; the input
    is left untouched.
    """
    ratios = tuple(float(r) for r in ratios)
    if len(ratios) != 3 or any(r <= 0 for r in ratios):
        raise ValueError("ratios must be three positive numbers")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise ValueError("ratios must sum to 1")
    n = kb.num_entities
    if n < 3:
        raise ValueError("need at least 3 entities to split")

    exact = [r * n for r in ratios]
    sizes = [int(x) for x in exact]
    remainders = sorted(range(3), key=lambda i: (-(exact[i] - sizes[i]), i))
    for i in remainders[: n - sum(sizes)]:
        sizes[i] += 1

    order = sorted(kb.entity_ids)
    rng = np.random.default_rng(seed)
    rng.shuffle(order)
    split = {}
    pos = 0
    for name, size in zip(SPLIT_NAMES, sizes):
        for e in order[pos : pos + size]:
            split[e] = name
        pos += size
    out = KnowledgeBase(kb.types, list(kb.entity_ids), kb.membership, dict(kb.notable), split)
    return out.validate()
