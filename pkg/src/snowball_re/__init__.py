"""Bootstrapping relation-extraction engine.

Starting from a handful of seed instances of a brand-new relation, the
engine iteratively harvests reliable instances from an unlabeled corpus and
trains a binary classifier for the relation:

* a relational siamese metric (pre-trained on existing relations) scores how
  likely two instances are to express the same relation;
* phase 1 of each round pulls unlabeled instances sharing an entity pair
  with the selected set and keeps the metric's top picks;
* phase 2 lets the freshly fine-tuned classifier nominate instances with
  entirely new entity pairs, again filtered by the metric.

Everything numerical is plain numpy with hand-written gradients.
"""

from .classifier import (
    ClassifierHead,
    FinetuneConfig,
    PretrainConfig,
    finetune,
    predict,
    pretrain_encoder,
)
from .corpus import (
    CorpusError,
    Instance,
    LabeledCorpus,
    SeedSet,
    Span,
    UnlabeledCorpus,
    build_pair_index,
    load_jsonl,
    sample_negative_batch,
    sample_rsn_pairs,
    save_jsonl,
)
from .encoder import (
    ConvEncoder,
    EmbeddingStore,
    EmbeddingStoreError,
    RepCache,
    build_vocab,
    load_embedding_store,
    load_word_vectors,
    save_embedding_store,
)
from .evaluation import (
    EvalError,
    Metrics,
    QueryComposition,
    QuerySet,
    SyntheticSpec,
    build_query_set,
    generate_synthetic,
    precision_at_n,
    score_binary,
)
from .rsn import RsnModel, RsnTrainConfig, pretrain_rsn
from .snowball import (
    IterationRecord,
    SnowballConfig,
    SnowballEngine,
    SnowballState,
)

__version__ = "0.1.0"

__all__ = [
    "ClassifierHead",
    "ConvEncoder",
    "CorpusError",
    "EmbeddingStore",
    "EmbeddingStoreError",
    "EvalError",
    "FinetuneConfig",
    "Instance",
    "IterationRecord",
    "LabeledCorpus",
    "Metrics",
    "PretrainConfig",
    "QueryComposition",
    "QuerySet",
    "RepCache",
    "RsnModel",
    "RsnTrainConfig",
    "SeedSet",
    "SnowballConfig",
    "SnowballEngine",
    "SnowballState",
    "Span",
    "SyntheticSpec",
    "UnlabeledCorpus",
    "build_pair_index",
    "build_query_set",
    "build_vocab",
    "finetune",
    "generate_synthetic",
    "load_embedding_store",
    "load_jsonl",
    "load_word_vectors",
    "precision_at_n",
    "predict",
    "pretrain_encoder",
    "pretrain_rsn",
    "sample_negative_batch",
    "sample_rsn_pairs",
    "save_embedding_store",
    "save_jsonl",
    "score_binary",
]
