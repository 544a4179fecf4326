"""embalign: word alignment from contextualized embeddings."""

__version__ = "0.1.0"

from .corpus_io import (  # noqa: F401
    AlignmentSet,
    PairEmbeddings,
    TokenizedPair,
    parse_gold_alignments,
    parse_parallel_corpus,
    read_embedding_container,
    write_alignments,
    write_embedding_container,
)
from .align_core import (  # noqa: F401
    AlignmentProbabilityMatrix,
    TransportProblem,
    cost_matrix,
    entmax15_rows,
    forward_backward,
    similarity_matrix,
    sinkhorn_transport,
    softmax_rows,
)
from .symmetrize import (  # noqa: F401
    ExtractionConfig,
    directional_sets,
    grow_diag,
    intersect,
    project_to_words,
)
from .pipeline import extract_word_alignment  # noqa: F401
from .evaluate import AlignmentScore, score, score_corpus  # noqa: F401
