"""Multiview correlated-representation learning toolkit.

Learns a shared embedding space across 2..J aligned feature views with
linear CCA, Deep CCA, linear GCCA and Deep Generalized CCA, and evaluates
it with cross-view Recall@n retrieval and retrieval-as-task scoring
(WER/BLEU).
"""

from corrspace.cca import CcaModel, covariance, fit_cca, inv_sqrt_spd, project
from corrspace.config import ExperimentConfig
from corrspace.data import (
    FramePosteriors,
    MultiviewDataset,
    TokenSequence,
    ViewMatrix,
    load_dataset,
    pool_frames,
    pool_tokens,
    save_dataset,
    synth_correlated,
)
from corrspace.dcca import DccaModel, dcca_objective, train_dcca
from corrspace.dgcca import DgccaModel, dgcca_gradient, gcca_solve, train_dgcca
from corrspace.errors import ConfigError, CorrspaceError, DataError, NumericalError
from corrspace.retrieval import (
    RetrievalReport,
    evaluate_all_pairs,
    random_baseline,
    recall_at_n,
)
from corrspace.scoring import (
    SentenceCorpus,
    bleu,
    load_corpus,
    nearest_by_edit_distance,
    score_retrieval_as_task,
    wer,
)

__version__ = "0.1.0"

__all__ = [
    "CcaModel",
    "ConfigError",
    "CorrspaceError",
    "DataError",
    "DccaModel",
    "DgccaModel",
    "ExperimentConfig",
    "FramePosteriors",
    "MultiviewDataset",
    "NumericalError",
    "RetrievalReport",
    "SentenceCorpus",
    "TokenSequence",
    "ViewMatrix",
    "bleu",
    "covariance",
    "dcca_objective",
    "dgcca_gradient",
    "evaluate_all_pairs",
    "fit_cca",
    "gcca_solve",
    "inv_sqrt_spd",
    "load_corpus",
    "load_dataset",
    "nearest_by_edit_distance",
    "pool_frames",
    "pool_tokens",
    "project",
    "random_baseline",
    "recall_at_n",
    "save_dataset",
    "score_retrieval_as_task",
    "synth_correlated",
    "train_dcca",
    "train_dgcca",
    "wer",
]
