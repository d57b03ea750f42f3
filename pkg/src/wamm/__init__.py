"""Web-attack payload classification: corpus curation, features, boosted trees, evaluation."""

from .corpus import (AttackClass, Dataset, LabeledRecord, LoadReport, class_distribution,
                     class_weights, load_dataset, save_dataset, stratified_split)
from .normalize import NormalizedRequest, parse_request, percent_decode
from .fingerprints import MatchReport, PatternBank, default_bank, match_categories, rule_block
from .curation import (LshParams, MinHasher, apply_corrections, flag_mislabeled, jaccard,
                       lsh_dedupe, minhash, shingle)
from .features import (FeaturePipeline, FeatureVector, HandcraftedFeatures, TfidfVectorizer,
                       extract_handcrafted, featurize, fit_vectorizer, shannon_entropy, transform)
from .augment import AugmentOp, apply, expand_dataset
from .gbdt import GbdtModel, TrainConfig, TrainLog, predict, predict_proba, train
from .model_io import load_model, save_model
from .evaluate import block_rate_table, confusion, latency_bench, metrics
from .seedcorpus import load_seed_corpus
from .errors import WammError

__version__ = "0.1.0"

__all__ = [
    "AttackClass", "Dataset", "LabeledRecord", "LoadReport", "class_distribution",
    "class_weights", "load_dataset", "save_dataset", "stratified_split",
    "NormalizedRequest", "parse_request", "percent_decode",
    "MatchReport", "PatternBank", "default_bank", "match_categories", "rule_block",
    "LshParams", "MinHasher", "apply_corrections", "flag_mislabeled", "jaccard",
    "lsh_dedupe", "minhash", "shingle",
    "FeaturePipeline", "FeatureVector", "HandcraftedFeatures", "TfidfVectorizer",
    "extract_handcrafted", "featurize", "fit_vectorizer", "shannon_entropy", "transform",
    "AugmentOp", "apply", "expand_dataset",
    "GbdtModel", "TrainConfig", "TrainLog", "predict", "predict_proba", "train",
    "load_model", "save_model",
    "block_rate_table", "confusion", "latency_bench", "metrics",
    "load_seed_corpus", "WammError",
]
