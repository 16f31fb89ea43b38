"""Knowledge-graph datasets: parsing, vocabularies, and filter maps.

A dataset directory holds ``train.txt``, ``valid.txt`` and ``test.txt``,
each line a tab-separated ``subject<TAB>relation<TAB>object`` triple of
string labels.  Loading builds an integer vocabulary from the training
split, doubles the relation set with inverse relations (one ``*_reverse``
label per base relation), and encodes every raw triple (s, r, o) as the
adjacent pair (s, r, o) and (o, r + R, s).  Head prediction then reduces
to tail prediction under the inverse relation, so the model only ever
ranks candidate objects.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, NamedTuple

INVERSE_SUFFIX = "_reverse"

SPLIT_FILES = {"train": "train.txt", "valid": "valid.txt", "test": "test.txt"}


class RawTriple(NamedTuple):
    subject: str
    relation: str
    object: str


class Triple(NamedTuple):
    subject: int
    relation: int
    object: int


class RelationCategory(str, Enum):
    """Cardinality class of a relation, from mean tail-per-head / head-per-tail counts."""

    ONE_TO_ONE = "1:1"
    ONE_TO_MANY = "1:N"
    MANY_TO_ONE = "N:1"
    MANY_TO_MANY = "N:N"


def load_triples(path: str | Path) -> list[RawTriple]:
    """Parse one split file into raw string triples.

    Every non-empty line must contain exactly three tab-separated fields;
    a malformed line raises ValueError naming the file and 1-based line
    number.  Order is preserved and duplicates are kept.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"triple file not found: {path}")
    triples: list[RawTriple] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n").rstrip("\r")
            if not line.strip():
                continue
            fields = line.split("\t")
            if len(fields) != 3 or not all(f.strip() for f in fields):
                raise ValueError(
                    f"{path}:{lineno}: expected 3 tab-separated fields, got {len(fields)}: {line!r}"
                )
            triples.append(RawTriple(fields[0].strip(), fields[1].strip(), fields[2].strip()))
    return triples


@dataclass
class Vocabulary:
    """Entity and relation label tables.

    ``relations`` stores base relations first (ids ``0 .. R-1``, in first
    occurrence order) followed by their inverses (``id + R``), so the
    inverse of relation ``r`` is always ``r + num_base_relations``.
    """

    entities: list[str]
    relations: list[str]
    entity_index: dict[str, int] = field(default_factory=dict)
    relation_index: dict[str, int] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.entity_index:
            self.entity_index = {label: i for i, label in enumerate(self.entities)}
        if not self.relation_index:
            self.relation_index = {label: i for i, label in enumerate(self.relations)}

    @property
    def num_entities(self) -> int:
        return len(self.entities)

    @property
    def num_relations_stored(self) -> int:
        """Count including inverse relations (twice the base count)."""
        return len(self.relations)

    @property
    def num_base_relations(self) -> int:
        return len(self.relations) // 2

    def entity_id(self, label: str) -> int:
        try:
            return self.entity_index[label]
        except KeyError:
            raise ValueError(f"unknown entity label: {label!r}") from None

    def relation_id(self, label: str) -> int:
        try:
            return self.relation_index[label]
        except KeyError:
            raise ValueError(f"unknown relation label: {label!r}") from None

    def inverse_of(self, relation: int) -> int:
        """Id of the inverse relation (adding or removing the R offset)."""
        base = self.num_base_relations
        return relation + base if relation < base else relation - base

    def to_json(self) -> str:
        return json.dumps({"entities": self.entities, "relations": self.relations}, indent=0, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "Vocabulary":
        obj = json.loads(text)
        vocab = cls(entities=list(obj["entities"]), relations=list(obj["relations"]))
        if vocab.num_relations_stored % 2 != 0:
            raise ValueError("relation table must contain base relations plus their inverses")
        return vocab


def build_vocabulary(triples: Iterable[RawTriple]) -> Vocabulary:
    """Assign dense ids in first-occurrence order over the given triples.

    Entities are collected from subject and object positions (subject
    first within a triple).  The relation table is the base relations in
    first-occurrence order followed by one inverse label per base
    relation, formed by appending ``_reverse``.
    """
    entities: dict[str, int] = {}
    relations: dict[str, int] = {}
    for t in triples:
        for ent in (t.subject, t.object):
            if ent not in entities:
                entities[ent] = len(entities)
        if t.relation not in relations:
            relations[t.relation] = len(relations)
    base = list(relations)
    for label in base:
        inverse = label + INVERSE_SUFFIX
        if inverse in relations:
            raise ValueError(f"relation label collides with an inverse label: {inverse!r}")
    return Vocabulary(entities=list(entities), relations=base + [label + INVERSE_SUFFIX for label in base])


def encode_with_inverses(triples: Iterable[RawTriple], vocab: Vocabulary) -> list[Triple]:
    """Encode raw triples to ids, interleaving each with its inverse.

    Output order is (s, r, o), (o, r + R, s) for each input triple, so the
    encoded list has exactly twice the input length and the inverse of
    element 2k sits at 2k + 1.  Labels missing from the vocabulary raise
    ValueError (evaluation splits may mention unseen labels only if the
    vocabulary was built to include them).
    """
    base = vocab.num_base_relations
    out: list[Triple] = []
    for t in triples:
        s = vocab.entity_id(t.subject)
        r = vocab.relation_id(t.relation)
        o = vocab.entity_id(t.object)
        if r >= base:
            raise ValueError(f"cannot encode a triple under an inverse relation: {t.relation!r}")
        out.append(Triple(s, r, o))
        out.append(Triple(o, r + base, s))
    return out


def decode_triple(triple: Triple, vocab: Vocabulary) -> RawTriple:
    """Map an encoded triple back to labels (inverse relations keep their suffix)."""
    return RawTriple(
        vocab.entities[triple.subject],
        vocab.relations[triple.relation],
        vocab.entities[triple.object],
    )


def build_filter_map(*encoded_splits: Iterable[Triple]) -> dict[tuple[int, int], set[int]]:
    """Known-true objects per (subject, relation) across all given splits.

    Keys cover every (s, r) pair that appears in any split, including
    inverse-relation pairs; values are sets of object ids.  Used to mask
    other true answers out of evaluation rankings.
    """
    fmap: dict[tuple[int, int], set[int]] = {}
    for split in encoded_splits:
        for t in split:
            fmap.setdefault((t.subject, t.relation), set()).add(t.object)
    return fmap


def classify_relations(train: Iterable[Triple], vocab: Vocabulary) -> dict[int, RelationCategory]:
    """Assign each base relation a cardinality category from training triples.

    For relation r over its base-direction training triples, tph is the
    triple count divided by the number of distinct heads and hpt the
    triple count divided by the number of distinct tails.  Thresholding
    both at 1.5 yields: 1:1 (both small), 1:N (tph large), N:1 (hpt
    large), N:N (both large).  A base relation with no training triples
    defaults to N:N with a warning.
    """
    base = vocab.num_base_relations
    counts = {r: 0 for r in range(base)}
    heads: dict[int, set[int]] = {r: set() for r in range(base)}
    tails: dict[int, set[int]] = {r: set() for r in range(base)}
    for t in train:
        if t.relation < base:
            counts[t.relation] += 1
            heads[t.relation].add(t.subject)
            tails[t.relation].add(t.object)
    categories: dict[int, RelationCategory] = {}
    for r in range(base):
        if counts[r] == 0:
            warnings.warn(
                f"relation {vocab.relations[r]!r} has no training triples; defaulting to N:N",
                stacklevel=2,
            )
            categories[r] = RelationCategory.MANY_TO_MANY
            continue
        tph = counts[r] / len(heads[r])
        hpt = counts[r] / len(tails[r])
        if tph < 1.5 and hpt < 1.5:
            categories[r] = RelationCategory.ONE_TO_ONE
        elif tph >= 1.5 and hpt < 1.5:
            categories[r] = RelationCategory.ONE_TO_MANY
        elif tph < 1.5 and hpt >= 1.5:
            categories[r] = RelationCategory.MANY_TO_ONE
        else:
            categories[r] = RelationCategory.MANY_TO_MANY
    return categories


@dataclass
class Dataset:
    """Fully prepared dataset: vocabulary, encoded splits, filter map."""

    vocab: Vocabulary
    train: list[Triple]
    valid: list[Triple]
    test: list[Triple]
    filter_map: dict[tuple[int, int], set[int]]
    categories: dict[int, RelationCategory]

    def split(self, name: str) -> list[Triple]:
        try:
            return {"train": self.train, "valid": self.valid, "test": self.test}[name]
        except KeyError:
            raise ValueError(f"unknown split {name!r}; expected train, valid or test") from None

    def filter_objects(self, subject: int, relation: int) -> set[int]:
        return self.filter_map.get((subject, relation), set())

    @property
    def num_entities(self) -> int:
        return self.vocab.num_entities

    @property
    def num_relations_stored(self) -> int:
        return self.vocab.num_relations_stored


def load_dataset(data_dir: str | Path) -> Dataset:
    """Load and encode a three-split dataset directory.

    The vocabulary is built over all three splits (evaluation entities
    and relations unseen in training still receive ids; their parameters
    simply stay at initialisation).  Raises FileNotFoundError listing
    every missing split file.
    """
    data_dir = Path(data_dir)
    missing = [str(data_dir / f) for f in SPLIT_FILES.values() if not (data_dir / f).exists()]
    if missing:
        raise FileNotFoundError(f"missing split files: {', '.join(missing)}")
    raw = {name: load_triples(data_dir / fname) for name, fname in SPLIT_FILES.items()}
    vocab = build_vocabulary(raw["train"] + raw["valid"] + raw["test"])
    encoded = {name: encode_with_inverses(raw[name], vocab) for name in raw}
    fmap = build_filter_map(encoded["train"], encoded["valid"], encoded["test"])
    categories = classify_relations(encoded["train"], vocab)
    return Dataset(
        vocab=vocab,
        train=encoded["train"],
        valid=encoded["valid"],
        test=encoded["test"],
        filter_map=fmap,
        categories=categories,
    )
