import numpy as np
import pytest

from semkge import (AnalogyEmbedding, CountedTripleSet, DatasetSplit,
                    KnowledgeGraph, Triple, Vocabulary)


def dense_relation_matrix(params, scalar_count):
    """Independent dense materialization of a block-diagonal relation map:
    scalar diagonal entries, then 2x2 blocks [[a, -c], [c, a]] on the
    interleaved trailing coordinates."""
    d = len(params)
    m = np.zeros((d, d))
    for i in range(scalar_count):
        m[i, i] = params[i]
    for j in range((d - scalar_count) // 2):
        i = scalar_count + 2 * j
        a, c = params[i], params[i + 1]
        m[i, i] = a
        m[i, i + 1] = -c
        m[i + 1, i] = c
        m[i + 1, i + 1] = a
    return m


def make_model(n_entities, n_relations, dim, scalar_count=None, seed=0,
               scale=1.0):
    """Fitted-state model with random parameters, bypassing training."""
    rng = np.random.default_rng(seed)
    model = AnalogyEmbedding(dim=dim, scalar_count=scalar_count, random_state=seed)
    s = model._effective_scalar_count()
    model.entity_vectors_ = rng.normal(scale=scale, size=(n_entities, dim))
    model.relation_params_ = rng.normal(scale=scale, size=(n_relations, dim))
    model.scalar_count_ = s
    model.entity_vocab_ = Vocabulary.of_size(n_entities, "e")
    model.relation_vocab_ = Vocabulary.of_size(n_relations, "r")
    return model


def make_split(triples, n_entities, n_relations, valid=(), test=()):
    return DatasetSplit(train=CountedTripleSet({Triple(*t): c for t, c in triples}),
                        valid=CountedTripleSet({Triple(*t): c for t, c in valid}),
                        test=CountedTripleSet({Triple(*t): c for t, c in test}),
                        n_entities=n_entities, n_relations=n_relations)


@pytest.fixture
def tiny_kg():
    entities = Vocabulary(["a", "b", "c", "d"])
    relations = Vocabulary(["r", "s"])
    triples = CountedTripleSet({Triple(0, 0, 1): 3, Triple(0, 0, 2): 1,
                                Triple(1, 1, 2): 2, Triple(2, 0, 3): 5,
                                Triple(3, 1, 0): 1})
    return KnowledgeGraph(entities, relations, triples)
