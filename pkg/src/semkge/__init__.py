"""Knowledge-graph embeddings with semantic initialization of new entities."""

__version__ = "0.1.0"

from .errors import (ConfigError, DataError, NumericalError, ParseError,
                     SamplingError, SemkgeError)
from .evaluation import (EvaluationResult, Query, evaluate_split,
                         ground_truth_ranks, head_query, mrr, mrr_star,
                         predicted_ranks, tail_query)
from .graph import (CountedTripleSet, DatasetSplit, KnowledgeGraph,
                    LabeledExample, SessionSplit, Triple, Vocabulary,
                    load_triples, sample_negatives, save_triples,
                    split_for_session)
from .initializers import (EntitySimilarityInitializer,
                           HybridSimilarityInitializer, InformedUniformInitializer,
                           InitConfig, InsertionRecord, RelationalSimilarityInitializer,
                           XavierInitializer, indicator_centroid, insert_entities,
                           iu_init, make_initializer, rs_indicators, rs_resultants,
                           es_indicators, write_report, xavier_init)
from .model import AnalogyEmbedding, Gradients
from .synthetic import (SyntheticKG, SyntheticKGSpec, extend_for_deployment,
                        generate_synthetic_kg, generate_word_vectors)
from .wordvec import (WordVectorTable, cosine, entity_vector,
                      load_word_vectors, save_word_vectors, tokenize_name)
