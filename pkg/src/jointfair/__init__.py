"""Joint evaluation of individual item fairness and relevance for recommender rankings."""

__version__ = "0.1.0"

from .base import (
    ConfigurationError,
    DegenerateInputError,
    DepthError,
    EvaluationError,
    MissingRankError,
    ParseError,
    SchemaError,
    StructuralError,
)
from .corpus import Aligned, RelevanceTable, RunData, load_qrels, load_run, validate, write_qrels, write_run
from .evaluate import ALL_MEASURES, HIGHER_IS_BETTER, FairRelEvaluator, ScoreReport, evaluate, resolve_measures
from .examination import ExamSpec, exam_weight
from .experiments import (
    InsertionDesign,
    ScoreTable,
    correlation_matrix,
    insertion_sim,
    kendall_tau,
    sliding_windows,
    synthetic_popularity_run,
    window_run,
)
from .fairness import fair_eval
from .joint import aif, hd, ibo_iwo, iaa, ifd_div, ifd_mul, iif, mme
from .preprocessing import KCoreFilter, RatingBinarizer, binarize, kcore_filter, load_interactions, split
from .relevance import rel_eval
from .rerank import CombMNZReranker, combmnz_rerank

__all__ = [
    "ALL_MEASURES", "HIGHER_IS_BETTER", "Aligned", "CombMNZReranker", "ConfigurationError",
    "DegenerateInputError", "DepthError", "EvaluationError", "ExamSpec", "FairRelEvaluator",
    "InsertionDesign", "KCoreFilter", "MissingRankError", "ParseError", "RatingBinarizer",
    "RelevanceTable", "RunData", "SchemaError", "ScoreReport", "ScoreTable", "StructuralError",
    "aif", "binarize", "combmnz_rerank", "correlation_matrix", "evaluate", "exam_weight",
    "fair_eval", "hd", "iaa", "ibo_iwo", "ifd_div", "ifd_mul", "iif", "insertion_sim",
    "kcore_filter", "kendall_tau", "load_interactions", "load_qrels", "load_run", "mme",
    "rel_eval", "resolve_measures", "sliding_windows", "split", "synthetic_popularity_run",
    "validate", "window_run", "write_qrels", "write_run",
]
