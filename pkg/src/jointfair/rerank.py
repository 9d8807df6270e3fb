"""CombMNZ fusion of relevance and coverage scores for fairer top-k lists."""

from __future__ import annotations

import warnings

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .base import ConfigurationError, check_cutoff
from .corpus import RunData
from .fairness import exposure_counts


def coverage_scores(run: RunData, k=10):
    """Per-item count of top-k appearances, indexed like ``run.item_ids``."""
    return exposure_counts(run, k)


def _minmax(values, valid):
    lo = np.where(valid, values, np.inf).min(axis=-1, keepdims=True)
    hi = np.where(valid, values, -np.inf).max(axis=-1, keepdims=True)
    span = hi - lo
    out = np.divide(values - lo, span, out=np.zeros_like(values), where=(span > 0) & valid)
    return np.where(valid, out, 0.0)


def combmnz_rerank(run: RunData, k_prime=25, k=10, coverage=None, keep_tail=False) -> RunData:
    """Re-rank each user's top-``k_prime`` candidates with CombMNZ.

    The relevance score is the min-max normalised predicted score over the
    candidates (0 for all when constant).  The fairness score is
    ``1 - coverage / max coverage`` over the same candidates, where coverage
    counts top-``k`` appearances across the whole base run.  The fused score
    is their sum times the number of non-zero components; ties keep the
    original order.

    Parameters
    ----------
    keep_tail : bool, default False
        Append the items ranked below ``k_prime`` unchanged, so a full
        ranking stays full.  Otherwise lists are cut to ``k_prime``.

    Returns
    -------
    RunData
        Same users and rounds; scores are the fused scores (NaN in the tail).
    """
    k = check_cutoff(k)
    k_prime = check_cutoff(k_prime, "k_prime")
    if k > k_prime:
        raise ConfigurationError("k must not exceed k_prime")
    if coverage is None:
        coverage = coverage_scores(run, k)
    if run.scores is None:
        raise ValueError("re-ranking needs predicted scores in the run")

    cand = run.items[:, :, :k_prime]
    valid = cand >= 0
    short = valid.sum(axis=-1) < k_prime
    if short.any():
        warnings.warn(f"{int(short.sum())} lists have fewer than k'={k_prime} candidates", stacklevel=2)
    scores = run.scores[:, :, :k_prime]
    if np.isnan(scores[valid]).any():
        raise ValueError("every top-k' candidate needs a predicted score")

    s_rel = _minmax(np.where(valid, scores, 0.0), valid)
    cov = np.where(valid, np.asarray(coverage, dtype=float)[np.maximum(cand, 0)], 0.0)
    top_cov = cov.max(axis=-1, keepdims=True)
    s_fair = np.where(valid, 1.0 - np.divide(cov, top_cov, out=np.zeros_like(cov), where=top_cov > 0), 0.0)
    nonzero = (s_rel > 0).astype(float) + (s_fair > 0)
    fused = np.where(valid, (s_rel + s_fair) * nonzero, -np.inf)

    position = np.broadcast_to(np.arange(cand.shape[-1]), cand.shape)
    order = np.lexsort((position, -fused), axis=-1)
    new_items = np.take_along_axis(cand, order, axis=-1)
    new_scores = np.where(np.take_along_axis(valid, order, axis=-1), np.take_along_axis(fused, order, axis=-1), np.nan)
    if keep_tail and run.items.shape[-1] > k_prime:
        tail = run.items[:, :, k_prime:]
        new_items = np.concatenate([new_items, tail], axis=-1)
        new_scores = np.concatenate([new_scores, np.full(tail.shape, np.nan)], axis=-1)
    return RunData(run.user_ids, run.item_ids, new_items, new_scores, run.round_ids)


class CombMNZReranker(BaseEstimator, TransformerMixin):
    """Estimator wrapper: ``fit`` measures coverage on a base run, ``transform`` re-ranks.

    Fitting and transforming the same run reproduces :func:`combmnz_rerank`.
    """

    def __init__(self, k_prime=25, k=10, keep_tail=False):
        self.k_prime = k_prime
        self.k = k
        self.keep_tail = keep_tail

    def fit(self, run: RunData, y=None):
        self.coverage_ = coverage_scores(run, self.k)
        self.item_ids_ = run.item_ids
        return self

    def transform(self, run: RunData) -> RunData:
        if not hasattr(self, "coverage_"):
            raise RuntimeError("call fit before transform")
        coverage = self.coverage_
        if run.item_ids != self.item_ids_:
            lookup = dict(zip(self.item_ids_, coverage))
            coverage = np.array([lookup.get(i, 0) for i in run.item_ids])
        return combmnz_rerank(run, self.k_prime, self.k, coverage, self.keep_tail)
