"""Knowledge-graph data model: vocabularies, counted triples, splits.

Triples are stored against dense integer vocabularies.  A triple may be
observed several times, so the core container maps each unique triple to
a positive observation count.
"""

import logging
from collections.abc import Mapping
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple

import numpy as np

from .errors import DataError, ParseError, SamplingError

logger = logging.getLogger(__name__)


class Triple(NamedTuple):
    head: int
    relation: int
    tail: int


class LabeledExample(NamedTuple):
    triple: Triple
    label: int  # +1 or -1


class Vocabulary:
    """Immutable name <-> dense-index mapping.

    Indices are contiguous from 0 in the order names were first added.
    """

    __slots__ = ("_names", "_index")

    def __init__(self, names: Iterable[str] = ()):
        self._names = list(names)
        self._index = {n: i for i, n in enumerate(self._names)}
        if len(self._index) != len(self._names):
            raise DataError("vocabulary names must be unique")

    @classmethod
    def of_size(cls, n: int, prefix: str = "e") -> "Vocabulary":
        return cls(f"{prefix}{i}" for i in range(n))

    def index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise DataError(f"unknown name {name!r}") from None

    def name(self, index: int) -> str:
        return self._names[index]

    @property
    def names(self) -> tuple:
        return tuple(self._names)

    def extended(self, new_names: Iterable[str]) -> "Vocabulary":
        """New vocabulary with ``new_names`` appended after the current ones."""
        return Vocabulary([*self._names, *new_names])

    def __contains__(self, name) -> bool:
        return name in self._index

    def __len__(self) -> int:
        return len(self._names)

    def __eq__(self, other) -> bool:
        return isinstance(other, Vocabulary) and self._names == other._names

    def __repr__(self) -> str:
        return f"Vocabulary({len(self)} names)"


class CountedTripleSet(Mapping):
    """Multiset of triples, stored as unique triple -> observation count."""

    __slots__ = ("_counts", "_total")

    def __init__(self, counts: Mapping = ()):
        data = {}
        for t, c in dict(counts).items():
            t = Triple(*t)
            c = int(c)
            if c < 1:
                raise DataError(f"count for {t} must be >= 1, got {c}")
            data[t] = data.get(t, 0) + c
        self._counts = data
        self._total = sum(data.values())

    @classmethod
    def from_pairs(cls, pairs: Iterable) -> "CountedTripleSet":
        out = {}
        for t, c in pairs:
            t = Triple(*t)
            out[t] = out.get(t, 0) + int(c)
        return cls(out)

    def __getitem__(self, triple) -> int:
        return self._counts[Triple(*triple)]

    def __iter__(self):
        return iter(self._counts)

    def __len__(self) -> int:
        return len(self._counts)

    @property
    def unique_count(self) -> int:
        return len(self._counts)

    @property
    def total_count(self) -> int:
        return self._total

    def triples(self) -> list:
        return list(self._counts)

    def arrays(self):
        """(heads, relations, tails, counts) as int64 arrays, insertion order."""
        if not self._counts:
            z = np.zeros(0, dtype=np.int64)
            return z, z.copy(), z.copy(), z.copy()
        arr = np.array([(t.head, t.relation, t.tail, c) for t, c in self._counts.items()],
                       dtype=np.int64)
        return arr[:, 0], arr[:, 1], arr[:, 2], arr[:, 3]

    def merged_with(self, other: "CountedTripleSet") -> "CountedTripleSet":
        out = dict(self._counts)
        for t, c in other.items():
            out[t] = out.get(t, 0) + c
        return CountedTripleSet(out)

    def __repr__(self) -> str:
        return f"CountedTripleSet({self.unique_count} unique, {self.total_count} total)"


@dataclass(frozen=True)
class KnowledgeGraph:
    entities: Vocabulary
    relations: Vocabulary
    triples: CountedTripleSet

    @property
    def n_entities(self) -> int:
        return len(self.entities)

    @property
    def n_relations(self) -> int:
        return len(self.relations)


@dataclass(frozen=True)
class DatasetSplit:
    """Train/valid/test partition of a counted triple set.

    The partition is over unique triples; each unique triple carries its
    full observation count into the split that owns it.
    """

    train: CountedTripleSet
    valid: CountedTripleSet
    test: CountedTripleSet
    n_entities: int
    n_relations: int

    def filter_triples(self) -> frozenset:
        """Unique triples of train and valid, used for filtered ranking."""
        return frozenset(self.train) | frozenset(self.valid)

    def positive_triples(self) -> frozenset:
        """Unique triples of all three splits; negative sampling avoids these."""
        return frozenset(self.train) | frozenset(self.valid) | frozenset(self.test)

    @property
    def all_triples(self) -> CountedTripleSet:
        return self.train.merged_with(self.valid).merged_with(self.test)


@dataclass(frozen=True)
class SessionSplit:
    """Datasets for one incremental step: a base session that excludes the
    held-out entities and a follow-up session over the full graph.

    Entity indices are remapped so known entities occupy ``0..n_known-1``
    and held-out entities occupy ``n_known..n_entities-1``; all contained
    triple sets use that index space.
    """

    entities: Vocabulary
    relations: Vocabulary
    d0: DatasetSplit
    d1: DatasetSplit
    insert_triples: CountedTripleSet
    full_triples: CountedTripleSet
    n_known: int

    @property
    def ookb_ids(self) -> tuple:
        return tuple(range(self.n_known, len(self.entities)))


def load_triples(path) -> KnowledgeGraph:
    """Read a triple TSV file.

    Format: ``head<TAB>relation<TAB>tail[<TAB>count]`` per line, UTF-8,
    count defaulting to 1.  Lines starting with ``#`` and blank lines are
    skipped.  Vocabularies are built in first-appearance order (head,
    relation, tail within each line); repeated triples accumulate counts.
    """
    entities: list = []
    e_index: dict = {}
    relations: list = []
    r_index: dict = {}
    counts: dict = {}

    def entity_id(name):
        i = e_index.get(name)
        if i is None:
            i = len(entities)
            e_index[name] = i
            entities.append(name)
        return i

    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            cols = line.split("\t")
            if len(cols) not in (3, 4):
                raise ParseError(f"expected 3 or 4 tab-separated columns, got {len(cols)}",
                                 path=path, line=lineno)
            h, r, t = (c.strip() for c in cols[:3])
            if not h or not r or not t:
                raise ParseError("empty field", path=path, line=lineno)
            if len(cols) == 4:
                try:
                    c = int(cols[3])
                except ValueError:
                    raise ParseError(f"count is not an integer: {cols[3]!r}",
                                     path=path, line=lineno) from None
                if c <= 0:
                    raise ParseError(f"count must be positive, got {c}",
                                     path=path, line=lineno)
            else:
                c = 1
            hi = entity_id(h)
            ri = r_index.get(r)
            if ri is None:
                ri = len(relations)
                r_index[r] = ri
                relations.append(r)
            ti = entity_id(t)
            key = Triple(hi, ri, ti)
            counts[key] = counts.get(key, 0) + c

    return KnowledgeGraph(Vocabulary(entities), Vocabulary(relations),
                          CountedTripleSet(counts))


def save_triples(kg: KnowledgeGraph, path) -> None:
    """Write a knowledge graph in the triple TSV format (with counts)."""
    with open(path, "w", encoding="utf-8") as fh:
        for t, c in kg.triples.items():
            fh.write(f"{kg.entities.name(t.head)}\t{kg.relations.name(t.relation)}"
                     f"\t{kg.entities.name(t.tail)}\t{c}\n")


def _partition_unique(triples: CountedTripleSet, rng: np.random.Generator,
                      fractions) -> tuple:
    """Shuffle unique triples (canonical order first, so the result depends
    only on content and seed) and cut into train/valid/test."""
    unique = sorted(triples)
    order = rng.permutation(len(unique))
    n = len(unique)
    n_train = int(round(fractions[0] * n))
    n_valid = int(round(fractions[1] * n))
    buckets = ([], [], [])
    for pos, j in enumerate(order):
        b = 0 if pos < n_train else (1 if pos < n_train + n_valid else 2)
        buckets[b].append(unique[j])
    return tuple({t: triples[t] for t in bucket} for bucket in buckets)


def split_for_session(kg: KnowledgeGraph, ookb, seed: int,
                      fractions=(0.8, 0.1, 0.1)) -> SessionSplit:
    """Partition a graph for one incremental learning step.

    Every triple touching an entity in ``ookb`` is withheld from the base
    session datasets; the follow-up session contains all triples.  A single
    train/valid/test cut of the unique triples is shared by both sessions,
    so base-session test queries reappear unchanged in the follow-up test
    set.  ``insert_triples`` collects triples that connect a held-out
    entity to a known one.  Deterministic in (graph, ookb, seed).
    """
    if abs(sum(fractions) - 1.0) > 1e-9 or any(f < 0 for f in fractions):
        raise DataError(f"split fractions must be non-negative and sum to 1: {fractions}")
    ookb = {kg.entities.index(e) if isinstance(e, str) else int(e) for e in ookb}
    for e in ookb:
        if not 0 <= e < kg.n_entities:
            raise DataError(f"ookb entity index {e} out of range")

    known = [i for i in range(kg.n_entities) if i not in ookb]
    if not known:
        raise DataError("ookb set covers the whole entity vocabulary")
    permuted = known + sorted(ookb)
    remap = np.empty(kg.n_entities, dtype=np.int64)
    for new, old in enumerate(permuted):
        remap[old] = new
    n_known = len(known)

    entities = Vocabulary(kg.entities.name(i) for i in permuted)
    full = {Triple(int(remap[t.head]), t.relation, int(remap[t.tail])): c
            for t, c in kg.triples.items()}
    full_set = CountedTripleSet(full)

    d0_triples = {t: c for t, c in full.items()
                  if t.head < n_known and t.tail < n_known}
    if not d0_triples:
        raise DataError("withholding the ookb entities leaves no base-session triples")
    insert = {t: c for t, c in full.items()
              if (t.head >= n_known) != (t.tail >= n_known)}

    rng = np.random.default_rng(seed)
    train, valid, test = _partition_unique(full_set, rng, fractions)

    def restrict(bucket):
        return CountedTripleSet({t: c for t, c in bucket.items() if t in d0_triples})

    d0 = DatasetSplit(restrict(train), restrict(valid), restrict(test),
                      n_entities=n_known, n_relations=kg.n_relations)
    d1 = DatasetSplit(CountedTripleSet(train), CountedTripleSet(valid),
                      CountedTripleSet(test),
                      n_entities=kg.n_entities, n_relations=kg.n_relations)
    return SessionSplit(entities=entities, relations=kg.relations, d0=d0, d1=d1,
                        insert_triples=CountedTripleSet(insert),
                        full_triples=full_set, n_known=n_known)


def _corruptions(positive: Triple, side: str, n_entities: int, known_positives):
    """All single-entity corruptions of one side that avoid known positives."""
    out = []
    for e in range(n_entities):
        cand = (Triple(e, positive.relation, positive.tail) if side == "head"
                else Triple(positive.head, positive.relation, e))
        if cand != positive and cand not in known_positives:
            out.append(cand)
    return out


def sample_negatives(positive: Triple, ratio: int, split: DatasetSplit,
                     rng: np.random.Generator):
    """Draw ``ratio`` negative examples for one positive triple.

    Each negative corrupts the head or the tail (fair coin) with a uniform
    random entity and is rejected while it collides with a unique positive
    of the split (any of train/valid/test; at this vocabulary scale a
    train-only filter would keep sampling held-out positives as negatives
    and crush their scores).  Raises SamplingError when no corruption of
    either side can avoid the positives.
    """
    if ratio < 0:
        raise DataError(f"negative ratio must be >= 0, got {ratio}")
    positive = Triple(*positive)
    known_positives = split.positive_triples()
    n_entities = split.n_entities
    out = []
    for _ in range(ratio):
        triple = None
        for _attempt in range(200):
            if rng.integers(0, 2) == 0:
                cand = Triple(int(rng.integers(0, n_entities)), positive.relation,
                              positive.tail)
            else:
                cand = Triple(positive.head, positive.relation,
                              int(rng.integers(0, n_entities)))
            if cand != positive and cand not in known_positives:
                triple = cand
                break
        if triple is None:
            # Rejection keeps losing: enumerate what is actually available.
            pool = (_corruptions(positive, "head", n_entities, known_positives)
                    + _corruptions(positive, "tail", n_entities, known_positives))
            if not pool:
                raise SamplingError(f"no valid corruption exists for {positive}")
            triple = pool[int(rng.integers(0, len(pool)))]
        out.append(LabeledExample(triple, -1))
    return out
