"""Knowledge-graph link prediction with combined dense encoders.

The package trains embedding models that score (subject, relation, object)
triples by feeding the concatenated subject and relation embeddings through
two parallel encoders (one selected per relation, one shared across all
relations), projecting the combined features back to entity space, and
taking inner products with every candidate object embedding.  Training uses
per-(subject, relation) multi-label targets; evaluation uses filtered
ranking with MRR and HIT@k.
"""

import os as _os

# Honor the thread cap before numpy loads its BLAS backend; the variables
# only take effect at library initialisation time.
_cap = _os.environ.get("COMDENSE_THREADS")
if _cap:
    for _var in (
        "OMP_NUM_THREADS",
        "OPENBLAS_NUM_THREADS",
        "MKL_NUM_THREADS",
        "NUMEXPR_NUM_THREADS",
        "VECLIB_MAXIMUM_THREADS",
    ):
        _os.environ.setdefault(_var, _cap)
del _os, _cap

from .adam import AdamHyper, AdamState, adam_step
from .checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from .config import ConfigError, RunConfig
from .data import (
    Dataset,
    RawTriple,
    RelationCategory,
    Triple,
    Vocabulary,
    build_filter_map,
    build_vocabulary,
    classify_relations,
    decode_triple,
    encode_with_inverses,
    load_dataset,
    load_triples,
)
from .evaluation import (
    EvalReport,
    RankRecord,
    RankingMetrics,
    category_report,
    evaluate,
    metrics_from_ranks,
    rank_of,
)
from .model import (
    ForwardCache,
    ModelConfig,
    Parameters,
    backward,
    forward,
    forward_batch,
    init_parameters,
    param_breakdown,
    param_count,
    score_triple,
)
from .training import FitResult, TrainExample, TrainSettings, build_examples, fit, loss_for_example, train_epoch

__version__ = "0.1.0"

__all__ = [
    "AdamHyper",
    "AdamState",
    "adam_step",
    "Checkpoint",
    "load_checkpoint",
    "save_checkpoint",
    "ConfigError",
    "RunConfig",
    "Dataset",
    "RawTriple",
    "RelationCategory",
    "Triple",
    "Vocabulary",
    "build_filter_map",
    "build_vocabulary",
    "classify_relations",
    "decode_triple",
    "encode_with_inverses",
    "load_dataset",
    "load_triples",
    "EvalReport",
    "RankRecord",
    "RankingMetrics",
    "category_report",
    "evaluate",
    "metrics_from_ranks",
    "rank_of",
    "ForwardCache",
    "ModelConfig",
    "Parameters",
    "backward",
    "forward",
    "forward_batch",
    "init_parameters",
    "param_breakdown",
    "param_count",
    "score_triple",
    "FitResult",
    "TrainExample",
    "TrainSettings",
    "build_examples",
    "fit",
    "loss_for_example",
    "train_epoch",
    "__version__",
]
