"""Fairness-only measures over the item exposure distribution.

All measures take the exposure-count vector over the *whole* catalogue,
zero-exposure items included, so a narrow set of recommended items is
penalised.
"""

from __future__ import annotations

import numpy as np

from .base import DegenerateInputError, check_cutoff, check_nonnegative_counts
from .corpus import Aligned

FAIR_MEASURES = ("Jain", "QF", "Ent", "FSat", "Gini")


def exposure_counts(run, k, rel=None, *, _data=None):
    """Number of (user, round) top-k lists containing each item.

    With ``rel`` the vector spans the joint item universe of run and
    relevance table; otherwise only the run's own items.
    """
    k = check_cutoff(k)
    if _data is not None:
        top, n = _data.top(k), _data.n
    elif rel is not None:
        data = Aligned(run, rel)
        top, n = data.top(k), data.n
    else:
        run.require_depth(k)
        top, n = run.items[:, :, :k], len(run.item_ids)
    return np.bincount(top.ravel(), minlength=n)


def _nonzero_total(x):
    x = check_nonnegative_counts(x)
    if x.sum() <= 0:
        raise DegenerateInputError("exposure vector has zero total")
    return x


def jain(x):
    """Jain's index ``(sum x)^2 / (n * sum x^2)``; 1 when exposure is uniform."""
    x = _nonzero_total(x)
    return float(x.sum() ** 2 / (len(x) * np.square(x).sum()))


def qf(x):
    """Share of catalogue items that appear in at least one top-k list."""
    x = check_nonnegative_counts(x)
    if len(x) == 0:
        raise DegenerateInputError("empty catalogue")
    return float(np.count_nonzero(x) / len(x))


def entropy(x):
    """Shannon entropy of the exposure shares, normalised by ``log n``."""
    x = _nonzero_total(x)
    n = len(x)
    if n < 2:
        raise DegenerateInputError("entropy normalisation needs n >= 2")
    p = x[x > 0] / x.sum()
    return float(-(p * np.log(p)).sum() / np.log(n))


def fair_share(total, n):
    return max(1, int(total // n))


def fsat(x, total=None):
    """Fraction of items receiving at least their fair share of exposure.

    The fair share is ``floor(total / n)`` with a floor of 1, where
    ``total`` defaults to the number of exposure slots ``k * m * W``
    (which equals ``sum(x)`` for full-depth lists).
    """
    x = check_nonnegative_counts(x)
    if len(x) == 0:
        raise DegenerateInputError("empty catalogue")
    total = x.sum() if total is None else total
    return float(np.mean(x >= fair_share(total, len(x))))


def gini(x):
    """Gini index of exposure; 0 is perfectly equal."""
    x = _nonzero_total(x)
    n = len(x)
    srt = np.sort(x)
    coef = 2.0 * np.arange(1, n + 1) - n - 1
    return float((coef * srt).sum() / (n * srt.sum()))


def fair_eval(run, rel=None, k=10, *, _data=None):
    """All five Fair measures at cutoff ``k`` as a dict."""
    x = exposure_counts(run, k, rel, _data=_data)
    return {"Jain": jain(x), "QF": qf(x), "Ent": entropy(x), "FSat": fsat(x), "Gini": gini(x)}
