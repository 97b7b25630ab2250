"""Ranking evaluation with observation-count ground truth.

Queries ask for the missing endpoint of a triple.  The ground-truth answer
is not a single entity but a ranking of every entity observed completing
the query, ordered by observation count (competition ranking, so equal
counts share a rank).  A model's predicted rank for a candidate is its
filtered rank: known train/valid positives other than the candidate are
removed before counting better-scored entities, and tied scores share the
mean of their occupied positions.

The headline metric averages ``1 / (|R_G - R_P| + 1)`` over (query,
candidate) pairs, so a candidate predicted exactly at its ground-truth
rank contributes 1 even when that rank is not 1.
"""

import logging
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .graph import CountedTripleSet, DatasetSplit, Triple
from .model import AnalogyEmbedding

logger = logging.getLogger(__name__)


class Query(NamedTuple):
    """A completion query: exactly one of head/tail is None."""

    head: Optional[int]
    relation: int
    tail: Optional[int]

    @property
    def side(self) -> str:
        """Which endpoint is asked for."""
        if (self.head is None) == (self.tail is None):
            raise ValueError(f"query must fix exactly one endpoint: {self}")
        return "tail" if self.tail is None else "head"

    @property
    def fixed(self) -> int:
        return self.head if self.tail is None else self.tail

    def completed_by(self, entity: int) -> Triple:
        if self.side == "tail":
            return Triple(self.head, self.relation, entity)
        return Triple(entity, self.relation, self.tail)


def tail_query(head: int, relation: int) -> Query:
    return Query(head, relation, None)


def head_query(relation: int, tail: int) -> Query:
    return Query(None, relation, tail)


def ground_truth_ranks(full_kg: CountedTripleSet, query: Query) -> dict:
    """Competition ranks of every entity observed completing the query.

    More observations rank higher; equal counts share the same rank
    (1, 2, 2, 4).  An unobserved query yields an empty ranking.
    """
    side = query.side
    counts = {}
    for t, c in full_kg.items():
        if side == "tail" and t.head == query.head and t.relation == query.relation:
            counts[t.tail] = counts.get(t.tail, 0) + c
        elif side == "head" and t.tail == query.tail and t.relation == query.relation:
            counts[t.head] = counts.get(t.head, 0) + c
    if not counts:
        logger.debug("query %s has no observed completions; skipping", (query,))
        return {}
    return ranks_from_counts(counts)


def ranks_from_counts(counts: dict) -> dict:
    """Competition ranking: rank = 1 + number of strictly larger counts."""
    values = np.array(list(counts.values()))
    return {e: int(1 + np.sum(values > c)) for e, c in counts.items()}


def predicted_ranks(model: AnalogyEmbedding, query: Query, candidates,
                    filter_set) -> dict:
    """Filtered predicted rank of each candidate entity for a query.

    All model entities are scored; entities forming a ``filter_set``
    triple with the query are removed, except the candidate currently
    being ranked.  Ties share the mean of their occupied positions, so
    ranks may be half-integers.
    """
    scores = model.scores_against_all(query.fixed, query.relation, query.side)
    keep = np.ones(len(scores), dtype=bool)
    for e in range(len(scores)):
        if query.completed_by(e) in filter_set:
            keep[e] = False
    out = {}
    for c in candidates:
        s_c = scores[c]
        mask = keep.copy()
        mask[c] = False  # the candidate never competes against itself
        others = scores[mask]
        higher = int(np.sum(others > s_c))
        ties = int(np.sum(others == s_c))
        out[c] = 1.0 + higher + 0.5 * ties
    return out


def mrr(predicted: list) -> float:
    """Mean reciprocal of predicted ranks (assumes ground-truth rank 1)."""
    ranks = np.asarray(predicted, dtype=np.float64)
    if ranks.size == 0:
        raise ValueError("mrr of an empty result list is undefined")
    if np.any(ranks < 1):
        raise ValueError("ranks must be >= 1")
    return float(np.mean(1.0 / ranks))


def mrr_star(pairs, weights=None) -> float:
    """Weighted mean of ``1 / (|R_G - R_P| + 1)`` over (R_G, R_P) pairs.

    Fractional value in (0, 1]; multiply by 100 where percentages are
    reported.
    """
    arr = np.asarray(pairs, dtype=np.float64)
    if arr.size == 0:
        raise ValueError("mrr_star of an empty result list is undefined")
    arr = arr.reshape(-1, 2)
    if np.any(arr < 1):
        raise ValueError("ranks must be >= 1")
    if weights is None:
        w = np.ones(len(arr))
    else:
        w = np.asarray(weights, dtype=np.float64)
        if len(w) != len(arr) or np.any(w <= 0):
            raise ValueError("weights must be positive and match the pairs")
    terms = 1.0 / (np.abs(arr[:, 0] - arr[:, 1]) + 1.0)
    return float(np.sum(w * terms) / np.sum(w))


class QueryRecord(NamedTuple):
    """One evaluated (query, ground-truth candidate) pair."""

    side: str
    triple: Triple        # the test triple that generated the pair
    candidate: int
    r_g: int
    r_p: float
    weight: int


@dataclass
class EvaluationResult:
    rows: list
    weighting: str = "count"

    def _aggregate(self, rows) -> Optional[float]:
        if not rows:
            return None
        pairs = [(r.r_g, r.r_p) for r in rows]
        weights = [r.weight for r in rows] if self.weighting == "count" else None
        return mrr_star(pairs, weights)

    @property
    def mrr_star(self) -> float:
        value = self._aggregate(self.rows)
        if value is None:
            raise ValueError("no queries were evaluated")
        return value

    def restricted_mrr_star(self, entity_ids) -> Optional[float]:
        """Aggregate over test triples whose entities all lie in the set."""
        ids = set(entity_ids)
        return self._aggregate([r for r in self.rows
                                if r.triple.head in ids and r.triple.tail in ids])

    def touching_mrr_star(self, entity_ids) -> Optional[float]:
        """Aggregate over test triples touching at least one entity of the set."""
        ids = set(entity_ids)
        return self._aggregate([r for r in self.rows
                                if r.triple.head in ids or r.triple.tail in ids])

    @property
    def n_pairs(self) -> int:
        return len(self.rows)


def evaluate_split(model: AnalogyEmbedding, split: DatasetSplit,
                   full_kg: CountedTripleSet, filter_set=None,
                   weighting: str = "count",
                   queries: str = "test") -> EvaluationResult:
    """Rank triples' heads and tails against the model.

    Each evaluated triple (h, r, t) contributes two pairs: candidate t for
    the tail query (h, r, ?) and candidate h for the head query (?, r, t).
    ``queries`` picks the triples: the split's test set, or every triple of
    the split ("all").  Ground-truth ranks come from the full graph's
    observation counts; predicted ranks are filtered against train and
    valid positives.  With ``weighting='count'`` each pair carries the
    triple's observation count; ``'uniform'`` weights pairs equally.
    """
    if weighting not in ("count", "uniform"):
        raise ValueError(f"unknown weighting {weighting!r}")
    if queries not in ("test", "all"):
        raise ValueError(f"unknown query selection {queries!r}")
    if filter_set is None:
        filter_set = split.filter_triples()
    evaluated = split.test if queries == "test" else split.all_triples

    tail_groups: dict = {}
    head_groups: dict = {}
    for t, c in evaluated.items():
        tail_groups.setdefault((t.head, t.relation), []).append((t, c))
        head_groups.setdefault((t.relation, t.tail), []).append((t, c))

    tail_counts: dict = {}
    head_counts: dict = {}
    for t, c in full_kg.items():
        tail_counts.setdefault((t.head, t.relation), {})[t.tail] = c
        head_counts.setdefault((t.relation, t.tail), {})[t.head] = c

    rows = []
    for (h, r), members in sorted(tail_groups.items()):
        query = tail_query(h, r)
        gt = ranks_from_counts(tail_counts[(h, r)])
        ranks = predicted_ranks(model, query, [t.tail for t, _ in members], filter_set)
        for t, c in members:
            rows.append(QueryRecord("tail", t, t.tail, gt[t.tail], ranks[t.tail], c))
    for (r, t_id), members in sorted(head_groups.items()):
        query = head_query(r, t_id)
        gt = ranks_from_counts(head_counts[(r, t_id)])
        ranks = predicted_ranks(model, query, [t.head for t, _ in members], filter_set)
        for t, c in members:
            rows.append(QueryRecord("head", t, t.head, gt[t.head], ranks[t.head], c))
    return EvaluationResult(rows, weighting)
