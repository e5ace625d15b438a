"""Search engine for annotated code snippets.

Retrieves (description, code) pairs from natural-language queries. Ships
embedding trainers, query/description/code encoders, lexical baselines, an
ensemble cosine index, Q&A-dump mining heuristics, and a retrieval
benchmark harness, plus a CLI and an HTTP search service.
"""

from .bench import EvalReport, GroundTruthQuery, evaluate, reciprocal_rank, run_benchmark
from .corpus import (
    AnnotatedSnippet,
    CodeTokens,
    NlTokenConfig,
    SnippetCollection,
    load_collection,
    tokenize_code,
    tokenize_natural,
    word_overlap,
)
from .embed import (
    EmbeddingTable,
    IdfTable,
    TrainSpec,
    build_training_corpus,
    compute_idf,
    lookup,
    train_embeddings,
)
from .encoders import (
    MarginSpec,
    NbowEncoder,
    NcsEncoder,
    UnifEncoder,
    UnifParams,
    encode_nbow,
    encode_ncs_code,
    encode_ncs_query,
    encode_unif_code,
    import_external_embeddings,
    train_unif,
)
from .errors import DataError
from .index import EnsembleSpec, SnippetIndex, build_index, load_index, save_index, search
from .lexical import Bm25Index, bm25_scores, build_bm25_index
from .miner import (
    DuplicateEdge,
    DuplicateGroup,
    RawPost,
    TrainingPair,
    build_ground_truth,
    group_duplicates,
    mine_snippets,
    rewrite_question,
    sample_training_pairs,
    strip_prompts,
    validate_snippet,
)
from .tuner import DupHead, TuneSpec, duplicate_probability, train_duplicate_head

__version__ = "0.1.0"

__all__ = [
    "AnnotatedSnippet",
    "Bm25Index",
    "CodeTokens",
    "DataError",
    "DupHead",
    "DuplicateEdge",
    "DuplicateGroup",
    "EmbeddingTable",
    "EnsembleSpec",
    "EvalReport",
    "GroundTruthQuery",
    "IdfTable",
    "MarginSpec",
    "NbowEncoder",
    "NcsEncoder",
    "NlTokenConfig",
    "RawPost",
    "SnippetCollection",
    "SnippetIndex",
    "TrainSpec",
    "TrainingPair",
    "TuneSpec",
    "UnifEncoder",
    "UnifParams",
    "bm25_scores",
    "build_bm25_index",
    "build_ground_truth",
    "build_index",
    "build_training_corpus",
    "compute_idf",
    "duplicate_probability",
    "encode_nbow",
    "encode_ncs_code",
    "encode_ncs_query",
    "encode_unif_code",
    "evaluate",
    "group_duplicates",
    "import_external_embeddings",
    "load_collection",
    "load_index",
    "lookup",
    "mine_snippets",
    "reciprocal_rank",
    "rewrite_question",
    "run_benchmark",
    "sample_training_pairs",
    "save_index",
    "search",
    "strip_prompts",
    "tokenize_code",
    "tokenize_natural",
    "train_duplicate_head",
    "train_embeddings",
    "train_unif",
    "validate_snippet",
    "word_overlap",
]
