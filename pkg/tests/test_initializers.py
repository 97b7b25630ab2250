import numpy as np
import pytest

from semkge import (CountedTripleSet, DataError, Triple, Vocabulary,
                    WordVectorTable, insert_entities, iu_init, xavier_init)
from semkge.initializers import (EntitySimilarityInitializer,
                                 HybridSimilarityInitializer, InitConfig,
                                 InformedUniformInitializer,
                                 RelationalSimilarityInitializer,
                                 XavierInitializer, es_indicators,
                                 indicator_centroid, make_initializer,
                                 rs_indicators, rs_resultants, write_report)
from semkge.model import inverse_params

from conftest import dense_relation_matrix, make_model


class TestCentroid:
    def test_single_indicator_returns_that_vector(self):
        model = make_model(4, 1, 6, seed=0)
        vec = indicator_centroid(model.entity_vectors_, [2])
        assert np.array_equal(vec, model.entity_vectors_[2])

    def test_two_unit_vectors(self):
        vectors = np.array([[1.0, 0.0], [0.0, 1.0]])
        assert np.allclose(indicator_centroid(vectors, [0, 1]), [0.5, 0.5])

    def test_matches_mean_oracle(self):
        rng = np.random.default_rng(5)
        vectors = rng.normal(size=(20, 7))
        idx = [3, 1, 8, 11, 15, 0, 19, 4]
        oracle = sum(vectors[i] for i in idx) / len(idx)
        assert np.allclose(indicator_centroid(vectors, idx), oracle, atol=1e-12)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            indicator_centroid(np.zeros((3, 2)), [])


class TestBaselineDraws:
    def test_xavier_bounds_for_dim_100(self):
        rng = np.random.default_rng(0)
        draws = np.array([xavier_init(100, rng) for _ in range(50)])
        assert np.all(np.abs(draws) <= 0.6)

    def test_xavier_statistics(self):
        rng = np.random.default_rng(1)
        samples = rng.uniform  # not used; keep draws via xavier_init
        draws = np.concatenate([xavier_init(100, rng) for _ in range(1000)])
        assert draws.size == 100_000
        bound = 0.6
        assert draws.min() >= -bound and draws.max() <= bound
        sigma_mean = (2 * bound / np.sqrt(12)) / np.sqrt(draws.size)
        assert abs(draws.mean()) < 3 * sigma_mean

    def test_iu_respects_per_dimension_ranges(self):
        rng = np.random.default_rng(2)
        rows = rng.normal(size=(12, 9)) * np.linspace(0.1, 3.0, 9)
        lo, hi = rows.min(axis=0), rows.max(axis=0)
        for _ in range(200):
            draw = iu_init(rows, rng)
            assert np.all(draw >= lo) and np.all(draw <= hi)

    def test_iu_degenerate_rows(self):
        rows = np.tile([1.5, -2.0, 0.25], (4, 1))
        draw = iu_init(rows, np.random.default_rng(3))
        assert np.allclose(draw, rows[0])


def toy_table(names, vectors):
    table = WordVectorTable(len(vectors[0]))
    for n, v in zip(names, vectors):
        table.add(n, v)
    return table


class TestEsIndicators:
    def test_exact_match_ranks_first(self):
        known = ("apple", "lamp", "chair")
        table = toy_table(known + ("pear",),
                          [[1, 0, 0], [0, 1, 0], [0, 0, 1], [0.9, 0.1, 0]])
        indicators, target = es_indicators("pear", known, table, k=2)
        assert target is not None
        assert indicators[0][0] == 0  # apple
        assert indicators[0][1] > indicators[1][1]

    def test_k_covers_all_known(self):
        known = ("a", "b", "c")
        table = toy_table(known + ("new",),
                          [[1, 0], [0.5, 0.5], [0, 1], [1, 0.2]])
        indicators, _ = es_indicators("new", known, table, k=3)
        assert [i for i, _ in indicators] == [0, 1, 2]
        sims = [s for _, s in indicators]
        assert sims == sorted(sims, reverse=True)

    def test_matches_brute_force_sort_oracle(self):
        rng = np.random.default_rng(9)
        names = [f"w{i}" for i in range(20)]
        vectors = rng.normal(size=(21, 8))
        table = toy_table(names + ["q"], list(vectors))
        indicators, target = es_indicators("q", names, table, k=5)
        # oracle: full sort over normalized dot products, ties by index
        tgt = vectors[20] / np.linalg.norm(vectors[20])
        sims = []
        for i in range(20):
            v = vectors[i] / np.linalg.norm(vectors[i])
            sims.append((i, float(np.dot(v, tgt))))
        oracle = sorted(sims, key=lambda p: (-p[1], p[0]))[:5]
        assert [i for i, _ in indicators] == [i for i, _ in oracle]
        for (i, s), (oi, os) in zip(indicators, oracle):
            assert s == pytest.approx(os, abs=1e-12)

    def test_oov_signals_fallback(self):
        table = toy_table(("a",), [[1.0, 0.0]])
        indicators, target = es_indicators("zzz", ("a",), table, k=2)
        assert indicators == [] and target is None

    def test_ties_break_to_lower_index(self):
        known = ("x", "y")
        table = toy_table(known + ("new",), [[1, 0], [1, 0], [1, 0]])
        indicators, _ = es_indicators("new", known, table, k=1)
        assert indicators[0][0] == 0


class TestRsResultants:
    def test_identity_map_tail_side(self):
        model = make_model(3, 1, 4, seed=1)
        model.relation_params_ = np.array([[1.0, 1.0, 1.0, 0.0]])
        triples = CountedTripleSet({Triple(0, 0, 3): 1})
        cents = rs_resultants(model, triples, ookb_id=3)
        assert np.allclose(cents.vectors[0], model.entity_vectors_[0], atol=1e-12)

    def test_identity_map_head_side_uses_inverse(self):
        model = make_model(3, 1, 4, seed=2)
        model.relation_params_ = np.array([[1.0, 1.0, 1.0, 0.0]])
        triples = CountedTripleSet({Triple(3, 0, 1): 1})
        cents = rs_resultants(model, triples, ookb_id=3)
        assert np.allclose(cents.vectors[0], model.entity_vectors_[1], atol=1e-12)

    def test_matches_dense_inverse_oracle(self):
        rng = np.random.default_rng(4)
        model = make_model(5, 2, 8, seed=4)
        model.relation_params_ = rng.uniform(0.5, 1.5, size=(2, 8))
        triples = CountedTripleSet({Triple(5, 0, 1): 2, Triple(5, 1, 2): 3,
                                    Triple(0, 1, 5): 1})
        cents = rs_resultants(model, triples, ookb_id=5)
        m0 = dense_relation_matrix(model.relation_params_[0], model.scalar_count_)
        m1 = dense_relation_matrix(model.relation_params_[1], model.scalar_count_)
        oracle_r0 = model.entity_vectors_[1] @ np.linalg.inv(m0)
        oracle_r1 = (3 * (model.entity_vectors_[2] @ np.linalg.inv(m1))
                     + 1 * (model.entity_vectors_[0] @ m1)) / 4
        assert np.allclose(cents.vectors[0], oracle_r0, atol=1e-9)
        assert np.allclose(cents.vectors[1], oracle_r1, atol=1e-9)
        assert cents.support == {0: 2, 1: 4}

    def test_inverse_composition_round_trip(self):
        rng = np.random.default_rng(6)
        model = make_model(2, 1, 10, seed=6)
        params = rng.uniform(0.5, 1.5, size=10)
        inv = inverse_params(params, model.scalar_count_)
        from semkge.model import map_rows
        v = rng.normal(size=10)
        assert np.allclose(map_rows(params, model.scalar_count_,
                                    map_rows(inv, model.scalar_count_, v)), v,
                           atol=1e-9)

    def test_singular_relation_skipped_with_warning(self, caplog):
        model = make_model(3, 2, 4, seed=7)
        model.relation_params_ = np.array([[0.0, 1.0, 1.0, 0.0],
                                           [1.0, 1.0, 1.0, 0.0]])
        triples = CountedTripleSet({Triple(3, 0, 1): 1, Triple(3, 1, 2): 1})
        with caplog.at_level("WARNING"):
            cents = rs_resultants(model, triples, ookb_id=3)
        assert 0 not in cents.vectors and 1 in cents.vectors
        assert any("singular" in r.message for r in caplog.records)


class TestRsIndicators:
    def test_aligned_candidate_ranks_first(self):
        model = make_model(4, 1, 4, seed=8)
        model.entity_vectors_ = np.array([[1.0, 0, 0, 0], [0, 1.0, 0, 0],
                                          [0, 0, 1.0, 0], [0.2, 0.2, 0.2, 0.2]])
        from semkge.initializers import ResultantCentroids
        cents = ResultantCentroids({0: np.array([2.0, 0, 0, 0])}, {0: 1})
        top = rs_indicators(model, cents, candidates=range(3), k=1)
        assert top[0][0] == 0

    def test_k_covers_all_candidates(self):
        model = make_model(5, 1, 4, seed=9)
        from semkge.initializers import ResultantCentroids
        cents = ResultantCentroids({0: np.ones(4)}, {0: 1})
        top = rs_indicators(model, cents, candidates=range(5), k=5)
        assert sorted(i for i, _ in top) == [0, 1, 2, 3, 4]

    def test_matches_exhaustive_oracle(self):
        rng = np.random.default_rng(10)
        model = make_model(15, 3, 6, seed=10)
        from semkge.initializers import ResultantCentroids
        cents = ResultantCentroids({r: rng.normal(size=6) for r in range(3)},
                                   {r: 1 for r in range(3)})
        top = rs_indicators(model, cents, candidates=range(15), k=4)
        scores = []
        for e in range(15):
            v = model.entity_vectors_[e]
            total = sum(float(np.dot(v, c) / (np.linalg.norm(v) * np.linalg.norm(c)))
                        for c in cents.vectors.values())
            scores.append((e, total))
        oracle = sorted(scores, key=lambda p: (-p[1], p[0]))[:4]
        assert [i for i, _ in top] == [i for i, _ in oracle]
        for (_, s), (_, os) in zip(top, oracle):
            assert s == pytest.approx(os, abs=1e-12)


def build_insert_model(dim=6, n_known=8, seed=3):
    model = make_model(n_known, 2, dim, seed=seed)
    return model


def word_table_for(model, extra):
    rng = np.random.default_rng(40)
    table = WordVectorTable(5)
    for name in model.entity_vocab_.names:
        table.add(name, rng.normal(size=5))
    for name, vec in extra.items():
        table.add(name, vec)
    return table


class TestInsertEntities:
    def test_empty_set_returns_unchanged_model(self):
        model = build_insert_model()
        grown, records = insert_entities(model, [], "xavier")
        assert records == []
        assert np.array_equal(grown.entity_vectors_, model.entity_vectors_)
        assert len(grown.entity_vocab_) == len(model.entity_vocab_)

    def test_existing_rows_and_relations_bitwise_unchanged(self):
        model = build_insert_model()
        before_e = model.entity_vectors_.copy()
        before_w = model.relation_params_.copy()
        table = word_table_for(model, {"new0": np.ones(5)})
        triples = CountedTripleSet({Triple(0, 0, 8): 2})
        for method in ("xavier", "informed_uniform", "es", "rs", "ers"):
            grown, _ = insert_entities(model, ["new0"], method,
                                       insert_triples=triples, word_vectors=table)
            assert grown.entity_vectors_[:8].tobytes() == before_e.tobytes()
            assert grown.relation_params_.tobytes() == before_w.tobytes()
            assert np.array_equal(model.entity_vectors_, before_e)

    def test_new_rows_inside_known_ranges_for_similarity_methods(self):
        model = build_insert_model()
        lo = model.entity_vectors_.min(axis=0)
        hi = model.entity_vectors_.max(axis=0)
        table = word_table_for(model, {"n0": np.ones(5), "n1": -np.ones(5)})
        triples = CountedTripleSet({Triple(0, 0, 8): 1, Triple(9, 1, 3): 2})
        for method in ("informed_uniform", "es", "rs", "ers"):
            grown, _ = insert_entities(model, ["n0", "n1"], method,
                                       insert_triples=triples, word_vectors=table)
            for row in grown.entity_vectors_[8:]:
                assert np.all(row >= lo - 1e-12) and np.all(row <= hi + 1e-12)

    def test_xavier_rows_inside_dimension_bound(self):
        model = build_insert_model(dim=100)
        grown, _ = insert_entities(model, ["n0"], "xavier")
        assert np.all(np.abs(grown.entity_vectors_[8]) <= 0.6)

    def test_multiple_entities_initialized_independently(self):
        model = build_insert_model()
        table = word_table_for(model, {"n0": np.ones(5), "n1": np.ones(5) * 0.5})
        a, _ = insert_entities(model, ["n0"], "es", word_vectors=table)
        b, _ = insert_entities(model, ["n1"], "es", word_vectors=table)
        both, _ = insert_entities(model, ["n0", "n1"], "es", word_vectors=table)
        assert np.array_equal(both.entity_vectors_[8], a.entity_vectors_[8])
        assert np.array_equal(both.entity_vectors_[9], b.entity_vectors_[8])

    def test_duplicate_or_known_names_rejected(self):
        model = build_insert_model()
        with pytest.raises(DataError):
            insert_entities(model, ["n0", "n0"], "xavier")
        with pytest.raises(DataError):
            insert_entities(model, [model.entity_vocab_.name(0)], "xavier")

    def test_es_oov_falls_back_to_informed_uniform(self):
        model = build_insert_model()
        table = word_table_for(model, {})
        grown, records = insert_entities(model, ["mystery"], "es",
                                         word_vectors=table)
        assert records[0].method_used == "informed_uniform"
        assert records[0].fallback_reason
        lo = model.entity_vectors_.min(axis=0)
        hi = model.entity_vectors_.max(axis=0)
        row = grown.entity_vectors_[8]
        assert np.all(row >= lo) and np.all(row <= hi)

    def test_rs_without_insert_triples_falls_back_to_es(self):
        model = build_insert_model()
        table = word_table_for(model, {"n0": np.ones(5)})
        _, records = insert_entities(model, ["n0"], "rs", insert_triples=None,
                                     word_vectors=table)
        assert records[0].method_used == "es"

    def test_rs_without_triples_or_vectors_reaches_informed_uniform(self):
        model = build_insert_model()
        _, records = insert_entities(model, ["n0"], "rs")
        assert records[0].method_used == "informed_uniform"

    def test_ers_indicators_subset_of_preliminary(self):
        model = build_insert_model(n_known=20)
        rng = np.random.default_rng(50)
        table = WordVectorTable(5)
        for name in model.entity_vocab_.names:
            table.add(name, rng.normal(size=5))
        table.add("n0", rng.normal(size=5))
        triples = CountedTripleSet({Triple(0, 0, 20): 1, Triple(20, 1, 5): 2})
        prelim_k, final_k = 6, 3
        init = HybridSimilarityInitializer(k=final_k, preliminary_k=prelim_k)
        _, records = init.insert(model, ["n0"], insert_triples=triples,
                                 word_vectors=table)
        rec = records[0]
        assert rec.method_used == "ers"
        assert len(rec.indicators) == final_k
        prelim, _ = es_indicators("n0", model.entity_vocab_.names, table, prelim_k)
        prelim_names = {model.entity_vocab_.name(i) for i, _ in prelim}
        assert {n for n, _ in rec.indicators} <= prelim_names

    def test_methods_deterministic_given_seed(self):
        model = build_insert_model()
        table = word_table_for(model, {"n0": np.ones(5)})
        triples = CountedTripleSet({Triple(0, 0, 8): 1})
        for method in ("xavier", "informed_uniform", "es", "rs", "ers"):
            cfg = InitConfig(method=method, seed=11)
            a, _ = make_initializer(cfg).insert(model, ["n0"],
                                                insert_triples=triples,
                                                word_vectors=table)
            b, _ = make_initializer(cfg).insert(model, ["n0"],
                                                insert_triples=triples,
                                                word_vectors=table)
            assert np.array_equal(a.entity_vectors_, b.entity_vectors_)

    def test_duplicated_entity_is_recovered_by_es_and_rs(self):
        # Clustered embedding: entity 0 sits at its cluster center; the new
        # entity duplicates entity 0's word vector and triple pattern.
        rng = np.random.default_rng(60)
        model = make_model(9, 1, 6, seed=60)
        centers = np.eye(3)
        rows = []
        for i in range(9):
            base = np.zeros(6)
            base[:3] = centers[i // 3]
            rows.append(base + 0.05 * rng.normal(size=6))
        # entity 0 sits exactly at the centroid its neighbors imply
        rows[0] = (rows[1] + rows[2]) / 2.0
        model.entity_vectors_ = np.array(rows)
        model.relation_params_ = np.array([[1.0] * 3 + [1.0, 1.0, 0.0]])
        model.scalar_count_ = 4

        table = WordVectorTable(4)
        for i in range(9):
            v = np.zeros(4)
            v[i // 3] = 1.0
            table.add(f"e{i}", v + 0.01 * rng.normal(size=4))
        dup = np.array(table.get("e0"))
        table.add("dup", dup)

        indicators, _ = es_indicators("dup", model.entity_vocab_.names, table, k=3)
        assert indicators[0][0] == 0

        # entity 0's neighbors: triples (0, r, 1) and (0, r, 2) in train say
        # the duplicate connects to 1 and 2 the same way.
        triples = CountedTripleSet({Triple(9, 0, 1): 1, Triple(9, 0, 2): 1})
        cents = rs_resultants(model, triples, ookb_id=9)
        top = rs_indicators(model, cents, candidates=range(9), k=9)
        scores = dict(top)
        assert scores[0] == pytest.approx(max(scores.values()), abs=1e-9)

    def test_report_file(self, tmp_path):
        model = build_insert_model()
        table = word_table_for(model, {"n0": np.ones(5)})
        _, records = insert_entities(model, ["n0"], "es", word_vectors=table)
        path = tmp_path / "report.tsv"
        write_report(records, path)
        lines = path.read_text().strip().split("\n")
        assert lines[0].startswith("entity\t")
        assert lines[1].startswith("n0\tes\t")


class TestInitConfig:
    def test_unknown_method_rejected(self):
        with pytest.raises(DataError):
            InitConfig(method="nope")

    def test_ers_k_bounded_by_preliminary(self):
        with pytest.raises(DataError):
            InitConfig(method="ers", ers_k=31, ers_preliminary_k=30)

    def test_factory_dispatch(self):
        assert isinstance(make_initializer(InitConfig(method="xavier")),
                          XavierInitializer)
        assert isinstance(make_initializer(InitConfig(method="informed_uniform")),
                          InformedUniformInitializer)
        assert isinstance(make_initializer(InitConfig(method="es")),
                          EntitySimilarityInitializer)
        assert isinstance(make_initializer(InitConfig(method="rs")),
                          RelationalSimilarityInitializer)
        assert isinstance(make_initializer(InitConfig(method="ers")),
                          HybridSimilarityInitializer)
