"""hashseg: hashtag segmentation with LM beam search and pairwise neural reranking."""

from .candidates import (
    CandidateSet,
    Hashtag,
    Segmentation,
    enumerate_segmentations,
    parse_hashtag,
    top_k_candidates,
)
from .features import (
    DEFAULT_LAYOUT,
    FeatureBundle,
    FeatureLayout,
    ResourcePack,
    candidate_features,
    extract_bundle,
    hashtag_features,
    word_shape_flags,
)
from .gold import GoldEntry, gold_pair_score, levenshtein, similarity
from .metrics import accuracy_at_k, evaluate_dataset, mrr, token_f1
from .ngram import (
    NGramCounts,
    NGramModel,
    count_ngrams,
    fit_good_turing,
    fit_kneser_ney,
    load_arpa,
    save_arpa,
    score_segmentation,
)
from .pipeline import Engine, aggregate_pairwise, rank_candidates, segment_hashtag
from .ranker import (
    PairExample,
    RankerModel,
    TrainConfig,
    build_training_pairs,
    load_model,
    loss_bce,
    loss_margin,
    loss_mse,
    loss_multitask,
    save_model,
    score_pair_mse,
    score_pair_multitask,
    score_pointwise_mr,
    train,
)

__version__ = "0.1.0"
