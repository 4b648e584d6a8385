"""Rank-correlation boosted trees: panel simulation, training, evaluation.

Scores are always flat lists in dataset row order (groups in dataset order,
rows in input order inside each group), matching ``Booster.predict``.
"""

from ._core import (
    Booster,
    Dataset,
    __version__,
    backtest,
    delta_rank_ic,
    evaluate,
    label_ranks,
    lambda_rank_ic_loss,
    load_model,
    logistic_surrogate_loss,
    ndcg_at_k,
    predicted_ranks,
    rank_ic_loss,
    simulate,
    spearman_rho,
    train,
)

__all__ = [
    "Booster",
    "Dataset",
    "__version__",
    "backtest",
    "delta_rank_ic",
    "evaluate",
    "label_ranks",
    "lambda_rank_ic_loss",
    "load_model",
    "logistic_surrogate_loss",
    "ndcg_at_k",
    "predicted_ranks",
    "rank_ic_loss",
    "simulate",
    "spearman_rho",
    "train",
]
