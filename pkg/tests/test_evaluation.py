import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from semkge import (CountedTripleSet, Triple, evaluate_split, ground_truth_ranks,
                    head_query, mrr, mrr_star, predicted_ranks, tail_query)
from semkge.evaluation import Query, ranks_from_counts

from conftest import dense_relation_matrix, make_model, make_split


class TestGroundTruthRanks:
    def test_count_ordering(self):
        kg = CountedTripleSet({Triple(0, 0, 1): 22, Triple(0, 0, 2): 5})
        ranks = ground_truth_ranks(kg, tail_query(0, 0))
        assert ranks == {1: 1, 2: 2}

    def test_all_equal_counts_share_rank_one(self):
        kg = CountedTripleSet({Triple(0, 0, t): 4 for t in (1, 2, 3)})
        ranks = ground_truth_ranks(kg, tail_query(0, 0))
        assert ranks == {1: 1, 2: 1, 3: 1}

    def test_competition_ranking_skips_after_tie(self):
        counts = {1: 9, 2: 7, 3: 7, 4: 1}
        assert ranks_from_counts(counts) == {1: 1, 2: 2, 3: 2, 4: 4}

    def test_no_completions_yields_empty(self):
        kg = CountedTripleSet({Triple(0, 0, 1): 1})
        assert ground_truth_ranks(kg, tail_query(5, 0)) == {}

    def test_head_queries_supported(self):
        kg = CountedTripleSet({Triple(0, 0, 3): 2, Triple(1, 0, 3): 8})
        ranks = ground_truth_ranks(kg, head_query(0, 3))
        assert ranks == {1: 1, 0: 2}

    def test_matches_sort_oracle(self):
        rng = np.random.default_rng(3)
        counts = {e: int(rng.integers(1, 40)) for e in range(12)}
        got = ranks_from_counts(counts)
        ordered = sorted(counts, key=lambda e: -counts[e])
        expected = {}
        for pos, e in enumerate(ordered):
            expected[e] = next(p + 1 for p, o in enumerate(ordered)
                               if counts[o] == counts[e])
        assert got == expected

    def test_query_must_fix_exactly_one_endpoint(self):
        with pytest.raises(ValueError):
            Query(1, 0, 2).side
        with pytest.raises(ValueError):
            Query(None, 0, None).side


class TestPredictedRanks:
    def test_strictly_highest_score_ranks_first(self):
        model = make_model(5, 1, 4, seed=1)
        model.entity_vectors_ = np.eye(5, 4)
        model.relation_params_ = np.array([[1.0, 1.0, 1.0, 0.0]])
        # query (0, r, ?): scores = v0 . v_t -> candidate 0 scores 1, others 0
        ranks = predicted_ranks(model, tail_query(0, 0), [0], frozenset())
        assert ranks[0] == 1.0

    def test_tied_scores_share_mean_rank(self):
        model = make_model(2, 1, 4, seed=2)
        model.entity_vectors_ = np.ones((2, 4))
        model.relation_params_ = np.array([[1.0, 1.0, 1.0, 0.0]])
        ranks = predicted_ranks(model, tail_query(0, 0), [0, 1], frozenset())
        assert ranks[0] == 1.5 and ranks[1] == 1.5

    def test_filtered_candidates_removed_except_self(self):
        model = make_model(4, 1, 4, seed=3)
        model.relation_params_ = np.array([[1.0, 1.0, 1.0, 0.0]])
        model.entity_vectors_ = np.array([[1.0, 0, 0, 0],
                                          [3.0, 0, 0, 0],
                                          [2.0, 0, 0, 0],
                                          [0.5, 0, 0, 0]])
        filt = frozenset({Triple(0, 0, 1)})
        ranks = predicted_ranks(model, tail_query(0, 0), [1, 2], filt)
        # candidate 1 is itself filtered but still ranked: beats 2 and 3 and 0
        assert ranks[1] == 1.0
        # candidate 2: entity 1 removed by filter, so only 0 and 3 below it
        assert ranks[2] == 1.0

    def test_filtered_rank_never_exceeds_raw_rank(self):
        model = make_model(12, 2, 6, seed=4)
        filt = frozenset({Triple(0, 0, t) for t in range(4)})
        raw = predicted_ranks(model, tail_query(0, 0), range(12), frozenset())
        filtered = predicted_ranks(model, tail_query(0, 0), range(12), filt)
        for e in range(12):
            assert filtered[e] <= raw[e]

    def test_matches_brute_force_oracle(self):
        rng = np.random.default_rng(5)
        model = make_model(12, 2, 6, seed=5)
        dense = [dense_relation_matrix(p, model.scalar_count_)
                 for p in model.relation_params_]
        filt = frozenset({Triple(3, 1, 7), Triple(3, 1, 2), Triple(1, 1, 3)})
        query = tail_query(3, 1)
        got = predicted_ranks(model, query, range(12), filt)
        scores = [model.entity_vectors_[3] @ dense[1] @ model.entity_vectors_[t]
                  for t in range(12)]
        for c in range(12):
            survivors = [e for e in range(12)
                         if e != c and Triple(3, 1, e) not in filt]
            higher = sum(1 for e in survivors if scores[e] > scores[c])
            ties = sum(1 for e in survivors if scores[e] == scores[c])
            assert got[c] == 1.0 + higher + 0.5 * ties


class TestMetrics:
    def test_mrr_perfect(self):
        assert mrr([1, 1, 1]) == 1.0

    def test_mrr_closed_form(self):
        assert mrr([1, 2]) == pytest.approx(0.75)

    def test_mrr_matches_scalar_oracle(self):
        rng = np.random.default_rng(6)
        ranks = rng.integers(1, 30, size=50)
        assert mrr(ranks) == pytest.approx(sum(1.0 / r for r in ranks) / 50)

    def test_mrr_empty_rejected(self):
        with pytest.raises(ValueError):
            mrr([])

    def test_mrr_star_exact_match_is_one(self):
        assert mrr_star([(3, 3.0), (7, 7.0), (1, 1.0)]) == 1.0

    def test_mrr_star_single_pair(self):
        assert mrr_star([(3, 5.0)]) == pytest.approx(1.0 / 3.0)

    def test_mrr_star_matches_scalar_oracle(self):
        rng = np.random.default_rng(7)
        pairs = [(int(rng.integers(1, 10)), float(rng.integers(1, 10)))
                 for _ in range(40)]
        weights = [int(rng.integers(1, 9)) for _ in range(40)]
        oracle = (sum(w / (abs(g - p) + 1) for (g, p), w in zip(pairs, weights))
                  / sum(weights))
        assert mrr_star(pairs, weights) == pytest.approx(oracle, rel=1e-12)

    def test_mrr_star_empty_rejected(self):
        with pytest.raises(ValueError):
            mrr_star([])

    def test_mrr_star_bad_ranks_rejected(self):
        with pytest.raises(ValueError):
            mrr_star([(0, 1.0)])


def brute_force_evaluate(model, split, full_kg, weighting="count"):
    """End-to-end pipeline oracle: dense scoring, explicit sorting/filtering."""
    dense = [dense_relation_matrix(p, model.scalar_count_)
             for p in model.relation_params_]
    n = len(model.entity_vectors_)
    filt = split.filter_triples()
    num = den = 0.0
    for t, c in sorted(split.test.items()):
        for side in ("tail", "head"):
            if side == "tail":
                comp = {tt.tail: cc for tt, cc in full_kg.items()
                        if tt.head == t.head and tt.relation == t.relation}
                cand = t.tail
                scores = [model.entity_vectors_[t.head] @ dense[t.relation]
                          @ model.entity_vectors_[e] for e in range(n)]
                blocked = {e for e in range(n)
                           if Triple(t.head, t.relation, e) in filt}
            else:
                comp = {tt.head: cc for tt, cc in full_kg.items()
                        if tt.tail == t.tail and tt.relation == t.relation}
                cand = t.head
                scores = [model.entity_vectors_[e] @ dense[t.relation]
                          @ model.entity_vectors_[t.tail] for e in range(n)]
                blocked = {e for e in range(n)
                           if Triple(e, t.relation, t.tail) in filt}
            r_g = 1 + sum(1 for v in comp.values() if v > comp[cand])
            pool = [e for e in range(n) if e != cand and e not in blocked]
            higher = sum(1 for e in pool if scores[e] > scores[cand])
            ties = sum(1 for e in pool if scores[e] == scores[cand])
            r_p = 1.0 + higher + 0.5 * ties
            w = c if weighting == "count" else 1
            num += w / (abs(r_g - r_p) + 1)
            den += w
    return num / den


class TestEvaluateSplit:
    def make_case(self, seed=8):
        rng = np.random.default_rng(seed)
        triples = {}
        for _ in range(30):
            t = Triple(int(rng.integers(10)), int(rng.integers(2)),
                       int(rng.integers(10)))
            triples[t] = triples.get(t, 0) + int(rng.integers(1, 9))
        full = CountedTripleSet(triples)
        keys = sorted(full)
        train = {t: full[t] for t in keys[:len(keys) * 7 // 10]}
        valid = {t: full[t] for t in keys[len(keys) * 7 // 10:len(keys) * 8 // 10]}
        test = {t: full[t] for t in keys[len(keys) * 8 // 10:]}
        split = make_split([(tuple(t), c) for t, c in train.items()], 10, 2,
                           valid=[(tuple(t), c) for t, c in valid.items()],
                           test=[(tuple(t), c) for t, c in test.items()])
        model = make_model(10, 2, 6, seed=seed)
        return model, split, full

    def test_matches_full_pipeline_oracle(self):
        model, split, full = self.make_case()
        for weighting in ("count", "uniform"):
            got = evaluate_split(model, split, full, weighting=weighting)
            assert got.mrr_star == pytest.approx(
                brute_force_evaluate(model, split, full, weighting), abs=1e-12)

    def test_perfect_single_triple_test_is_one(self):
        # One test triple (2, r, 1); a rotation block maps v2 exactly onto v1
        # so both its queries rank the truth first (identity maps cannot: the
        # self-candidate would always win).
        split = make_split([((0, 0, 1), 3)], 3, 1, test=[((2, 0, 1), 5)])
        full = CountedTripleSet({Triple(0, 0, 1): 3, Triple(2, 0, 1): 5})
        model = make_model(3, 1, 4, seed=9)
        model.relation_params_ = np.array([[0.0, 0.0, 0.0, -1.0]])
        model.entity_vectors_ = np.array([[0.0, 0.0, 0.0, 0.0],
                                          [0.0, 0.0, 0.0, 1.0],
                                          [0.0, 0.0, 1.0, 0.0]])
        res = evaluate_split(model, split, full)
        assert res.mrr_star == 1.0

    def test_restriction_noop_when_new_entities_absent_from_test(self):
        model, split, full = self.make_case(seed=10)
        res = evaluate_split(model, split, full)
        assert res.restricted_mrr_star(range(10)) == pytest.approx(res.mrr_star)

    def test_row_weights_match_counts(self):
        model, split, full = self.make_case(seed=11)
        res = evaluate_split(model, split, full)
        for row in res.rows:
            assert row.weight == split.test[row.triple]

    def test_sensitive_to_permuted_rows(self):
        model, split, full = self.make_case(seed=12)
        base = evaluate_split(model, split, full).mrr_star
        permuted = model.copy()
        rng = np.random.default_rng(0)
        permuted.entity_vectors_ = permuted.entity_vectors_[
            rng.permutation(len(permuted.entity_vectors_))]
        shuffled = evaluate_split(permuted, split, full).mrr_star
        assert shuffled != pytest.approx(base)

    def test_mrr_star_bounds(self):
        model, split, full = self.make_case(seed=13)
        value = evaluate_split(model, split, full).mrr_star
        assert 0.0 < value <= 1.0


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000))
def test_monotone_transform_leaves_ranks_invariant(seed):
    rng = np.random.default_rng(seed)
    model = make_model(8, 1, 4, seed=seed)
    filt = frozenset({Triple(0, 0, int(rng.integers(8)))})
    query = tail_query(0, 0)
    base = predicted_ranks(model, query, range(8), filt)
    # strictly increasing transform of scores: scale entity 0's row (head side
    # fixed) does not reorder; instead scale all scores via the relation map
    scaled = model.copy()
    scaled.relation_params_ = scaled.relation_params_ * 3.0
    transformed = predicted_ranks(scaled, query, range(8), filt)
    assert base == transformed
