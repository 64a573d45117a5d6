"""patmine: lexico-semantic pattern learning for actionable app-review feedback.

The toolkit classifies app reviews along two independent binary tasks,
defect reports and improvement requests.  It learns tree-structured token
patterns by genetic programming with sequential covering, matches them with
a small recursive engine, and optionally distills a pattern group into a
linear max-margin classifier through distantly-supervised training.
"""

from .corpus import (
    AnnotatorVote,
    DatasetSplit,
    FeedbackType,
    LabeledExample,
    PreparedCorpus,
    RawReview,
    fleiss_kappa,
    ingest,
    majority_vote,
    percent_agreement,
    prepare,
    split,
)
from .gazetteer import Gazetteer, load_gazetteer, lookup
from .linguistics import Document, RuleTagger, Token, annotate, tag_pos, tokenize
from .pattern import (
    PatternGroup,
    PatternNode,
    doc_match,
    group_label,
    parse_dsl,
    print_dsl,
    span_match,
    token_match,
)
from .gp import GpConfig, TerminalPool, evolve_one_pattern, fitness, learn_group, mine_terminal_pool
from .classifier import LinearModel, SvmParams, distant_train, featurize, predict, train
from .evaluation import ExperimentInputs, MetricsReport, REFERENCE_RESULTS, run_experiment, score

__version__ = "0.1.0"

__all__ = [
    "AnnotatorVote", "DatasetSplit", "FeedbackType", "LabeledExample", "PreparedCorpus",
    "RawReview", "fleiss_kappa", "ingest", "majority_vote", "percent_agreement", "prepare",
    "split", "Gazetteer", "load_gazetteer", "lookup", "Document", "RuleTagger", "Token",
    "annotate", "tag_pos", "tokenize", "PatternGroup", "PatternNode", "doc_match",
    "group_label", "parse_dsl", "print_dsl", "span_match", "token_match", "GpConfig",
    "TerminalPool", "evolve_one_pattern", "fitness", "learn_group", "mine_terminal_pool",
    "LinearModel", "SvmParams", "distant_train", "featurize", "predict", "train",
    "ExperimentInputs", "MetricsReport", "REFERENCE_RESULTS", "run_experiment", "score",
    "__version__",
]
