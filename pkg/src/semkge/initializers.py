"""Embedding initializers for entities added after a model was trained.

Every method produces a vector for each new entity from the frozen
pre-insertion model and appends it; existing entity rows and all relation
maps are carried over unchanged.  Two baselines draw uniform coordinates
(over a dimension-derived range, or over the per-dimension range of the
existing rows).  The similarity methods place a new entity at the centroid
of an indicator set of known entities, chosen by word-vector similarity
(entity similarity), by agreement with resultant vectors computed from the
new entity's observed triples through the relation maps (relational
similarity), or by both in sequence (hybrid).

Methods that need inputs the caller cannot provide fall back along
entity-similarity -> informed-uniform, and every fallback is recorded in
the insertion report.
"""

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from sklearn.base import BaseEstimator

from .errors import DataError
from .graph import CountedTripleSet, Triple
from .model import AnalogyEmbedding, is_invertible, map_rows, map_rows_inverse
from .wordvec import WordVectorTable, entity_vector

logger = logging.getLogger(__name__)

METHODS = ("xavier", "informed_uniform", "es", "rs", "ers")


@dataclass
class InitConfig:
    """Configuration shared by the insertion entry point and the CLI."""

    method: str = "ers"
    es_k: int = 8
    rs_k: int = 18
    ers_k: int = 9
    ers_preliminary_k: int = 30
    seed: int = 0

    def __post_init__(self):
        if self.method not in METHODS:
            raise DataError(f"unknown initialization method {self.method!r}; "
                            f"choose from {', '.join(METHODS)}")
        for name in ("es_k", "rs_k", "ers_k", "ers_preliminary_k"):
            if getattr(self, name) < 1:
                raise DataError(f"{name} must be >= 1")
        if self.ers_k > self.ers_preliminary_k:
            raise DataError("ers_k cannot exceed ers_preliminary_k")


@dataclass
class InsertionRecord:
    """What happened while initializing one new entity."""

    entity: str
    method_requested: str
    method_used: str
    fallback_reason: Optional[str] = None
    indicators: list = field(default_factory=list)  # (known entity name, score)


def write_report(records, path) -> None:
    """Insertion report as TSV, one row per inserted entity."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("entity\tmethod_requested\tmethod_used\tfallback_reason\tindicators\n")
        for rec in records:
            ind = ";".join(f"{name}:{score:.6f}" for name, score in rec.indicators)
            fh.write(f"{rec.entity}\t{rec.method_requested}\t{rec.method_used}"
                     f"\t{rec.fallback_reason or ''}\t{ind}\n")


def indicator_centroid(entity_vectors: np.ndarray, indices) -> np.ndarray:
    """Arithmetic mean of the indicated entity rows."""
    indices = np.asarray(list(indices), dtype=np.int64)
    if indices.size == 0:
        raise ValueError("indicator set is empty")
    return entity_vectors[indices].mean(axis=0)


def xavier_init(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform coordinates in +-6/sqrt(dim)."""
    if dim <= 0:
        raise ValueError(f"dim must be positive, got {dim}")
    bound = 6.0 / np.sqrt(dim)
    return rng.uniform(-bound, bound, size=dim)


def iu_init(entity_vectors: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Uniform coordinates within each dimension's range over existing rows."""
    if len(entity_vectors) == 0:
        raise ValueError("informed-uniform initialization needs at least one existing row")
    lo = entity_vectors.min(axis=0)
    hi = entity_vectors.max(axis=0)
    return rng.uniform(lo, hi)


def es_indicators(ookb_name: str, known_names, table: WordVectorTable, k: int):
    """Top-k known entities by word-vector cosine to the new entity's vector.

    Returns (indicator list [(entity_id, score)], target vector or None).
    The target vector is None when the name has no usable word vector;
    ties break toward the lower entity index; if fewer than k known
    entities resolve, all of them are returned.
    """
    target = entity_vector(table, ookb_name)
    if target is None:
        return [], None
    ids, sims = [], []
    for i, name in enumerate(known_names):
        vec = entity_vector(table, name)
        if vec is not None:
            ids.append(i)
            sims.append(float(np.dot(vec, target)))
    if not ids:
        return [], target
    if len(ids) < k:
        logger.warning("only %d of %d requested indicator entities resolve for %r",
                       len(ids), k, ookb_name)
    order = np.argsort(-np.asarray(sims), kind="stable")[:k]
    return [(ids[j], sims[j]) for j in order], target


@dataclass
class ResultantCentroids:
    """Per-relation mean of resultant vectors, with the observation count
    that supports each mean."""

    vectors: dict  # relation id -> ndarray (dim,)
    support: dict  # relation id -> total observation count

    def __len__(self):
        return len(self.vectors)


def rs_resultants(model: AnalogyEmbedding, insert_triples: CountedTripleSet,
                  ookb_id: int) -> ResultantCentroids:
    """Resultant vector centroids for one new entity.

    For each observed triple, the known endpoint is pushed through the
    relation map (new entity in tail position) or its inverse (new entity
    in head position); repeated observations weight the per-relation mean
    by count.  Triples whose relation map is singular in the inverse
    direction are skipped with a warning; relations with no surviving
    triples are omitted.
    """
    n_known = len(model.entity_vectors_)
    sums: dict = {}
    weights: dict = {}
    s = model.scalar_count_
    for triple, count in insert_triples.items():
        if triple.tail == ookb_id and triple.head < n_known:
            alpha = map_rows(model.relation_params_[triple.relation], s,
                             model.entity_vectors_[triple.head])[0]
        elif triple.head == ookb_id and triple.tail < n_known:
            params = model.relation_params_[triple.relation]
            if not is_invertible(params, s):
                logger.warning("skipping %s: relation map %d is singular", triple,
                               triple.relation)
                continue
            alpha = map_rows_inverse(params, s, model.entity_vectors_[triple.tail])[0]
        else:
            logger.debug("ignoring %s: not an insert triple for entity %d",
                         triple, ookb_id)
            continue
        sums[triple.relation] = sums.get(triple.relation, 0.0) + count * alpha
        weights[triple.relation] = weights.get(triple.relation, 0) + count
    vectors = {r: sums[r] / weights[r] for r in sums}
    return ResultantCentroids(vectors, weights)


def _safe_cosine_to(vectors: np.ndarray, target: np.ndarray) -> np.ndarray:
    """Cosine of each row against target; zero-norm rows contribute 0."""
    norms = np.linalg.norm(vectors, axis=1)
    t_norm = np.linalg.norm(target)
    if t_norm < 1e-300:
        return np.zeros(len(vectors))
    out = np.zeros(len(vectors))
    ok = norms > 0
    out[ok] = (vectors[ok] @ target) / (norms[ok] * t_norm)
    return out


def rs_indicators(model: AnalogyEmbedding, centroids: ResultantCentroids,
                  candidates, k: int):
    """Top-k candidates by accumulated cosine similarity to the resultant
    centroids (one term per relation); ties break toward the lower index."""
    if len(centroids) == 0:
        raise ValueError("no resultant centroids available")
    candidates = np.asarray(sorted(candidates), dtype=np.int64)
    vectors = model.entity_vectors_[candidates]
    scores = np.zeros(len(candidates))
    for r, centroid in centroids.vectors.items():
        scores += _safe_cosine_to(vectors, centroid)
    order = np.argsort(-scores, kind="stable")[:k]
    return [(int(candidates[j]), float(scores[j])) for j in order]


class OokbInitializer(BaseEstimator):
    """Shared insertion mechanics; subclasses supply one entity's vector."""

    method = None

    def insert(self, model: AnalogyEmbedding, ookb_names,
               insert_triples: CountedTripleSet = None,
               word_vectors: WordVectorTable = None):
        """Append initialized rows for ``ookb_names`` to a fitted model.

        ``insert_triples`` use the post-insertion index space: entity j of
        ``ookb_names`` has index ``n_known + j``.  Returns the grown model
        (the input model is never mutated) and one InsertionRecord per new
        entity.  New entities are initialized independently, each against
        the pre-insertion rows only.
        """
        model._check_fitted()
        names = list(ookb_names)
        if len(set(names)) != len(names):
            raise DataError("duplicate names in the insertion set")
        for name in names:
            if name in model.entity_vocab_:
                raise DataError(f"entity {name!r} already exists in the model")
        n_known = len(model.entity_vectors_)
        by_entity = _triples_by_entity(insert_triples, n_known, len(names))
        rng = np.random.default_rng(self.get_params().get("random_state", 0))

        rows, records = [], []
        for j, name in enumerate(names):
            vec, record = self._vector_for(
                model, name, n_known + j,
                by_entity.get(n_known + j, CountedTripleSet()), word_vectors, rng)
            rows.append(vec)
            records.append(record)
            if record.fallback_reason:
                logger.warning("%s: fell back from %s to %s (%s)", name,
                               record.method_requested, record.method_used,
                               record.fallback_reason)

        grown = model.copy()
        if rows:
            grown.entity_vectors_ = np.vstack([model.entity_vectors_,
                                               np.array(rows, dtype=np.float64)])
        grown.entity_vocab_ = model.entity_vocab_.extended(names)
        return grown, records

    def _vector_for(self, model, name, new_id, triples, word_vectors, rng):
        raise NotImplementedError

    # fallback helpers ------------------------------------------------

    def _iu(self, model, name, rng, reason):
        return iu_init(model.entity_vectors_, rng), InsertionRecord(
            entity=name, method_requested=self.method, method_used="informed_uniform",
            fallback_reason=reason)

    def _es(self, model, name, word_vectors, rng, k, reason=None):
        if word_vectors is None:
            return self._iu(model, name, rng,
                            (reason + "; " if reason else "") + "no word-vector table")
        indicators, target = es_indicators(name, model.entity_vocab_.names,
                                           word_vectors, k)
        if not indicators:
            why = ("no word vector for entity name" if target is None
                   else "no known entity resolves to a word vector")
            return self._iu(model, name, rng, (reason + "; " if reason else "") + why)
        vec = indicator_centroid(model.entity_vectors_, [i for i, _ in indicators])
        named = [(model.entity_vocab_.name(i), s) for i, s in indicators]
        return vec, InsertionRecord(entity=name, method_requested=self.method,
                                    method_used="es", fallback_reason=reason,
                                    indicators=named)


def _triples_by_entity(insert_triples, n_known, n_new):
    """Group insert triples by the new entity they touch; validates that
    each triple connects exactly one new entity to a known one."""
    out: dict = {}
    if insert_triples is None:
        return out
    hi = n_known + n_new
    for triple, count in insert_triples.items():
        head_new = n_known <= triple.head < hi
        tail_new = n_known <= triple.tail < hi
        if head_new == tail_new:
            logger.debug("ignoring %s: does not connect one new entity to one "
                         "known entity", triple)
            continue
        key = triple.head if head_new else triple.tail
        out.setdefault(key, {})[triple] = count
    return {k: CountedTripleSet(v) for k, v in out.items()}


class XavierInitializer(OokbInitializer):
    """Uniform coordinates over +-6/sqrt(dim), blind to the trained space."""

    method = "xavier"

    def __init__(self, random_state=0):
        self.random_state = random_state

    def _vector_for(self, model, name, new_id, triples, word_vectors, rng):
        return xavier_init(model.entity_vectors_.shape[1], rng), InsertionRecord(
            entity=name, method_requested=self.method, method_used=self.method)


class InformedUniformInitializer(OokbInitializer):
    """Uniform coordinates within the per-dimension range of existing rows."""

    method = "informed_uniform"

    def __init__(self, random_state=0):
        self.random_state = random_state

    def _vector_for(self, model, name, new_id, triples, word_vectors, rng):
        return iu_init(model.entity_vectors_, rng), InsertionRecord(
            entity=name, method_requested=self.method, method_used=self.method)


class EntitySimilarityInitializer(OokbInitializer):
    """Centroid of the known entities whose word vectors are closest to the
    new entity's word vector."""

    method = "es"

    def __init__(self, k=8, random_state=0):
        self.k = k
        self.random_state = random_state

    def _vector_for(self, model, name, new_id, triples, word_vectors, rng):
        return self._es(model, name, word_vectors, rng, self.k)


class RelationalSimilarityInitializer(OokbInitializer):
    """Centroid of the known entities that best agree with the resultant
    vectors implied by the new entity's observed triples."""

    method = "rs"

    def __init__(self, k=18, es_k=8, random_state=0):
        self.k = k
        self.es_k = es_k
        self.random_state = random_state

    def _vector_for(self, model, name, new_id, triples, word_vectors, rng):
        centroids = rs_resultants(model, triples, new_id)
        if len(centroids) == 0:
            return self._es(model, name, word_vectors, rng, self.es_k,
                            reason="no usable insert triples")
        candidates = range(len(model.entity_vectors_))
        indicators = rs_indicators(model, centroids, candidates, self.k)
        vec = indicator_centroid(model.entity_vectors_, [i for i, _ in indicators])
        named = [(model.entity_vocab_.name(i), s) for i, s in indicators]
        return vec, InsertionRecord(entity=name, method_requested=self.method,
                                    method_used=self.method, indicators=named)


class HybridSimilarityInitializer(OokbInitializer):
    """Preliminary indicator set by word-vector similarity, filtered down by
    relational agreement."""

    method = "ers"

    def __init__(self, k=9, preliminary_k=30, es_k=8, random_state=0):
        self.k = k
        self.preliminary_k = preliminary_k
        self.es_k = es_k
        self.random_state = random_state

    def _vector_for(self, model, name, new_id, triples, word_vectors, rng):
        if word_vectors is None:
            return self._iu(model, name, rng, "no word-vector table")
        preliminary, target = es_indicators(name, model.entity_vocab_.names,
                                            word_vectors, self.preliminary_k)
        if not preliminary:
            why = ("no word vector for entity name" if target is None
                   else "no known entity resolves to a word vector")
            return self._iu(model, name, rng, why)
        centroids = rs_resultants(model, triples, new_id)
        if len(centroids) == 0:
            prefix = preliminary[:self.es_k]
            vec = indicator_centroid(model.entity_vectors_, [i for i, _ in prefix])
            named = [(model.entity_vocab_.name(i), s) for i, s in prefix]
            return vec, InsertionRecord(entity=name, method_requested=self.method,
                                        method_used="es",
                                        fallback_reason="no usable insert triples",
                                        indicators=named)
        indicators = rs_indicators(model, centroids, [i for i, _ in preliminary],
                                   self.k)
        vec = indicator_centroid(model.entity_vectors_, [i for i, _ in indicators])
        named = [(model.entity_vocab_.name(i), s) for i, s in indicators]
        return vec, InsertionRecord(entity=name, method_requested=self.method,
                                    method_used=self.method, indicators=named)


def make_initializer(config: InitConfig) -> OokbInitializer:
    if config.method == "xavier":
        return XavierInitializer(random_state=config.seed)
    if config.method == "informed_uniform":
        return InformedUniformInitializer(random_state=config.seed)
    if config.method == "es":
        return EntitySimilarityInitializer(k=config.es_k, random_state=config.seed)
    if config.method == "rs":
        return RelationalSimilarityInitializer(k=config.rs_k, es_k=config.es_k,
                                               random_state=config.seed)
    return HybridSimilarityInitializer(k=config.ers_k,
                                       preliminary_k=config.ers_preliminary_k,
                                       es_k=config.es_k, random_state=config.seed)


def insert_entities(model: AnalogyEmbedding, ookb_names, config,
                    insert_triples: CountedTripleSet = None,
                    word_vectors: WordVectorTable = None):
    """Initialize and append new entities using a configured method.

    ``config`` may be an InitConfig or a method name.  Returns the grown
    model and the insertion records.
    """
    if isinstance(config, str):
        config = InitConfig(method=config)
    return make_initializer(config).insert(model, ookb_names,
                                           insert_triples=insert_triples,
                                           word_vectors=word_vectors)
