"""Relevance-only ranking measures: HR, MRR, P, R, MAP, NDCG at cutoff k."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .base import check_cutoff
from .corpus import Aligned

REL_MEASURES = ("HR", "MRR", "P", "R", "MAP", "NDCG")


@dataclass(frozen=True)
class RelScores:
    hr: float
    mrr: float
    precision: float
    recall: float
    map: float
    ndcg: float
    k: int
    n_users: int
    n_excluded: int

    def as_dict(self):
        d = asdict(self)
        return {
            "HR": d["hr"], "MRR": d["mrr"], "P": d["precision"],
            "R": d["recall"], "MAP": d["map"], "NDCG": d["ndcg"],
        }


def per_user_relevance(data: Aligned, k):
    """Per-user Rel scores averaged over rounds.

    Returns
    -------
    scores : dict of name -> ndarray of shape (m,)
    scored : ndarray of bool, users with at least one relevant item
    """
    hits = data.top_grades(k) > 0  # (W, m, k)
    n_rel = data.n_relevant.astype(float)
    scored = n_rel > 0
    ranks = np.arange(1, k + 1, dtype=float)
    discount = 1.0 / np.log2(ranks + 1.0)
    cum = np.cumsum(hits, axis=-1)
    n_hits = cum[..., -1].astype(float)
    safe_rel = np.where(scored, n_rel, 1.0)
    cap = np.minimum(safe_rel, k)

    first = np.argmax(hits, axis=-1)
    any_hit = hits.any(axis=-1)
    mrr = np.where(any_hit, 1.0 / (first + 1.0), 0.0)
    ap = (hits * cum / ranks).sum(axis=-1) / cap
    ideal = np.cumsum(discount)[cap.astype(int) - 1]
    ndcg = (hits * discount).sum(axis=-1) / ideal

    per_round = {
        "HR": any_hit.astype(float),
        "MRR": mrr,
        "P": n_hits / k,
        "R": n_hits / safe_rel,
        "MAP": ap,
        "NDCG": ndcg,
    }
    return {name: v.mean(axis=0) for name, v in per_round.items()}, scored


def rel_eval(run, rel, k=10, *, _data=None) -> RelScores:
    """Macro-averaged Rel measures at cutoff ``k``.

    Users with no relevant item are left out of the average; their count is
    reported in ``n_excluded``.  MRR is 0 for a user whose top-k holds no
    relevant item.  MAP divides by ``min(|R*_u|, k)``.  NDCG uses binary
    gains (grade > 0).
    """
    k = check_cutoff(k)
    data = _data if _data is not None else Aligned(run, rel)
    scores, scored = per_user_relevance(data, k)
    n_scored = int(scored.sum())
    if n_scored:
        avg = {name: float(v[scored].mean()) for name, v in scores.items()}
    else:
        avg = dict.fromkeys(scores, 0.0)
    return RelScores(
        hr=avg["HR"], mrr=avg["MRR"], precision=avg["P"], recall=avg["R"],
        map=avg["MAP"], ndcg=avg["NDCG"], k=k,
        n_users=n_scored, n_excluded=int(data.m - n_scored),
    )
