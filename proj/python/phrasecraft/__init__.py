"""Phrase embeddings, evaluation metrics and phrase-based topic modelling."""

from ._core import (
    DataError,
    Embeddings,
    InvalidArgument,
    IoError,
    NumericError,
    ParseError,
    PhrasecraftError,
    __version__,
    cosine,
    detect_vector_format,
    embed_phrase,
    filter_ppdb,
    gradient_suite,
    interpret_topics,
    levenshtein,
    levenshtein_chars,
    load_vectors,
    longest_common_substring,
    nearest_neighbors,
    orthogonality_penalty,
    pearson,
    run_cli,
    save_vectors,
    spearman,
    tokenize,
    topic_distribution,
    triplet_loss,
)

__all__ = [name for name in dir() if not name.startswith("_")]
