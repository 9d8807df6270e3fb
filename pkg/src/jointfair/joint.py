"""Joint fairness + relevance measures.

Every public function accepts a :class:`~jointfair.corpus.RunData` and a
:class:`~jointfair.corpus.RelevanceTable`.  Passing ``detail=True`` returns
``(score, diagnostics)`` where the diagnostics hold the per-user or per-item
vector behind the aggregate.

Measures and the direction that is fairer:

========  =====  ==========================================
IAA       lower  linear-normalised exposure vs. relevance
IFD_div   lower  pairwise exposure/relevance disparity
IFD_mul   lower  pairwise exposure*relevance disparity
HD        lower  Hellinger distance, relevance vs. clicks
MME       lower  mean max envy between items
IBO       higher items better off than under uniform ranking
IWO       lower  items worse off than under uniform ranking
II-F      lower  user-item exposure vs. target exposure
AI-F      lower  item exposure vs. target, averaged over users
========  =====  ==========================================
"""

from __future__ import annotations

import math

import numpy as np
import scipy.sparse as sp

from .base import (
    ConfigurationError,
    DegenerateInputError,
    MissingRankError,
    check_cutoff,
    check_unit_interval,
)
from .corpus import Aligned
from .examination import ExamSpec, exam_weight, position_weights

JOINT_MEASURES = ("IBO", "IWO", "IAA", "IFD_div", "IFD_mul", "HD", "MME", "II-F", "AI-F")

TIEBREAKS = ("deterministic", "random")


def _prepare(run, rel, data):
    return data if data is not None else Aligned(run, rel)


def _finish(value, diag, detail):
    return (float(value), diag) if detail else float(value)


# ---------------------------------------------------------------------------
# IAA


def _iaa(data, k):
    k = check_cutoff(k)
    if k < 2:
        raise DegenerateInputError("IAA needs k >= 2 (normalised linear weights)")
    W, n = data.W, data.n
    exposure = data.position_matrix(k, position_weights("normalized_linear", k))

    # per-user min-max normalised relevance over all n items
    R = data.grades
    nnz = data.n_relevant
    rmax = np.zeros(data.m)
    rmin = np.zeros(data.m)
    for u in np.nonzero(nnz)[0]:
        row = R.data[R.indptr[u]:R.indptr[u + 1]]
        rmax[u] = row.max()
        if nnz[u] == n:
            rmin[u] = row.min()
    span = rmax - rmin
    scale = np.divide(1.0, span, out=np.zeros_like(span), where=span > 0)
    # implicit zeros map to (0 - rmin) * scale = 0 because rmin > 0 only when the row is dense
    rnorm = R.copy()
    rnorm.data = (rnorm.data - np.repeat(rmin, nnz)) * np.repeat(scale, nnz)

    diff = (exposure - W * rnorm).tocsr()
    per_user = np.asarray(abs(diff).sum(axis=1)).ravel() / (n * W)
    return per_user.mean(), per_user


def iaa(run, rel, k=10, *, detail=False, data=None):
    """Inequity of amortised attention (lower is fairer).

    For each user, the absolute gap between summed normalised linear
    exposure ``(k - z) / (k - 1)`` and the min-max normalised grade, summed
    over all ``n`` items and divided by ``n * W``; averaged over users.  A
    user whose grades are all equal has normalised grade 0 everywhere.
    """
    value, per_user = _iaa(_prepare(run, rel, data), k)
    return _finish(value, per_user, detail)


# ---------------------------------------------------------------------------
# IFD


def _full_ranks(data):
    """Rank of every relevant (u, i) pair in every round, shape ``(W, nnz)``.

    Pairs follow CSR order of ``data.grades``.
    """
    R = data.grades
    rows = np.repeat(np.arange(data.m), data.n_relevant)
    cols = R.indices
    query = rows * data.n + cols
    ranks = np.zeros((data.W, len(query)))
    for w in range(data.W):
        lists = data.items[w]
        u, p = np.nonzero(lists >= 0)
        keys = u * data.n + lists[u, p]
        order = np.argsort(keys, kind="stable")
        keys, pos = keys[order], p[order] + 1
        at = np.searchsorted(keys, query)
        at_c = np.minimum(at, max(len(keys) - 1, 0))
        found = (at < len(keys)) & (keys[at_c] == query) if len(keys) else np.zeros(len(query), bool)
        if not found.all():
            miss = np.nonzero(~found)[0][0]
            raise MissingRankError(data.user_ids[rows[miss]], data.item_ids[cols[miss]])
        ranks[w] = pos[at_c]
    return ranks


def _ifd_div(data):
    R = data.grades
    ranks = _full_ranks(data)
    merit = exam_weight("dcg", ranks).reshape(ranks.shape).mean(axis=0) / R.data if R.nnz else np.zeros(0)
    per_user = np.zeros(data.m)
    for u in np.nonzero(data.n_relevant)[0]:
        lo, hi = R.indptr[u], R.indptr[u + 1]
        g, j = R.data[lo:hi], merit[lo:hi]
        pairs = g[:, None] >= g[None, :]
        gap = np.maximum(0.0, j[:, None] - j[None, :])
        per_user[u] = gap[pairs].sum() / pairs.sum()
    return per_user.mean(), per_user


def ifd_div(run, rel, *, detail=False, data=None):
    """Individual fairness disparity, exposure divided by merit (lower is fairer).

    Uses DCG exposure of each relevant item's rank in the *full* ranking, so
    every item with grade > 0 must be ranked; a missing one raises
    :class:`~jointfair.base.MissingRankError`.  Pairs ``(i, i')`` with
    ``r_i >= r_i' > 0`` are ordered and include ``i = i'``.
    """
    value, per_user = _ifd_div(_prepare(run, rel, data))
    return _finish(value, per_user, detail)


def _ifd_mul(data, k):
    k = check_cutoff(k)
    n = data.n
    if n < 2:
        raise DegenerateInputError("IFD_mul needs at least two items")
    exposure = data.position_matrix(k, position_weights("dcg", k))
    J = data.grades.multiply(exposure).tocsr() / data.W
    J.eliminate_zeros()
    nnz = np.diff(J.indptr)
    s1 = np.asarray(J.sum(axis=1)).ravel()
    mean = s1 / n
    # sum over ordered pairs of (J_i - J_i')^2 = 2 n * sum_i (J_i - mean)^2, zeros included
    centred = J.data - np.repeat(mean, nnz)
    ss = np.bincount(np.repeat(np.arange(data.m), nnz), weights=centred**2, minlength=data.m).astype(float)
    ss += (n - nnz) * mean**2
    per_user = 2.0 * n * ss / (n * (n - 1))
    return per_user.mean(), per_user


def ifd_mul(run, rel, k=10, *, detail=False, data=None):
    """Individual fairness disparity, exposure times merit (lower is fairer).

    Mean over ordered item pairs of the squared difference of
    ``r * DCG exposure`` within the top-k, averaged over users.
    """
    value, per_user = _ifd_mul(_prepare(run, rel, data), k)
    return _finish(value, per_user, detail)


# ---------------------------------------------------------------------------
# HD


def hellinger(q, c):
    """``sqrt(sum (sqrt q - sqrt c)^2) / sqrt 2`` over two non-negative vectors."""
    q = np.asarray(q, dtype=float)
    c = np.asarray(c, dtype=float)
    return float(np.sqrt(np.square(np.sqrt(q) - np.sqrt(c)).sum()) / np.sqrt(2.0))


def reference_lists(data, k, tiebreak="deterministic", seed=None):
    """Top-k items per user sorted by grade; ``-1`` pads users with < k relevant items.

    Ties are broken by item id (``deterministic``) or by a seeded shuffle
    (``random``).
    """
    if tiebreak not in TIEBREAKS:
        raise ConfigurationError(f"tiebreak must be one of {TIEBREAKS}")
    rng = np.random.default_rng(seed) if tiebreak == "random" else None
    R = data.grades
    ref = np.full((data.m, k), -1, dtype=np.int64)
    ref_grades = np.zeros((data.m, k))
    for u in np.nonzero(data.n_relevant)[0]:
        lo, hi = R.indptr[u], R.indptr[u + 1]
        cols, g = R.indices[lo:hi], R.data[lo:hi]
        second = cols if rng is None else rng.permutation(len(cols))
        order = np.lexsort((second, -g))[:k]
        ref[u, : len(order)] = cols[order]
        ref_grades[u, : len(order)] = g[order]
    return ref, ref_grades


def _hd(data, k, gamma, tiebreak, seed):
    k = check_cutoff(k)
    gamma = check_unit_interval(gamma, "gamma")
    ref, ref_grades = reference_lists(data, k, tiebreak, seed)
    totals = np.asarray(data.grades.sum(axis=1)).ravel()
    rnorm = np.divide(ref_grades, totals[:, None], out=np.zeros_like(ref_grades), where=totals[:, None] > 0)
    q = rnorm.sum(axis=0) / data.m

    top = data.top(k)
    grades = data.top_grades(k)
    patience = gamma * position_weights(ExamSpec("rbp", gamma), k)  # gamma * gamma^(p-1)
    per_round, click_dists, dropped = [], [], []
    for w in range(data.W):
        g = grades[w]
        survive = np.ones_like(g)
        survive[:, 1:] = np.cumprod(1.0 - g[:, :-1], axis=1)
        clicks = g * patience * survive
        csum = clicks.sum(axis=1)
        cnorm = np.divide(clicks, csum[:, None], out=np.zeros_like(clicks), where=csum[:, None] > 0)
        # click of each reference-list item at its system position (0 outside top-k)
        match = ref[:, :, None] == top[w][:, None, :]
        match &= ref[:, :, None] >= 0
        cstar = (match * cnorm[:, None, :]).sum(axis=-1)
        tot = cstar.sum(axis=1)
        keep = tot > 0
        if keep.any():
            c = (cstar[keep] / tot[keep, None]).sum(axis=0) / keep.sum()
        else:
            c = np.zeros(k)
        per_round.append(hellinger(q, c))
        click_dists.append(c)
        dropped.append(int((~keep).sum()))
    diag = {"relevance": q, "clicks": np.array(click_dists), "per_round": np.array(per_round),
            "dropped_users": dropped}
    return float(np.mean(per_round)), diag


def hd(run, rel, k=10, gamma=0.9, tiebreak="deterministic", seed=None, *, detail=False, data=None):
    """Hellinger distance between position-aggregated relevance and clicks (lower is fairer).

    Clicks follow a cascade: the item at system position ``p`` is clicked
    with probability ``r * gamma^p`` times the chance that no earlier item
    was relevant.  Users with no click mass on their reference top-k are
    dropped from the click average and counted in the diagnostics.  With
    several rounds the per-round distances are averaged.
    """
    value, diag = _hd(_prepare(run, rel, data), k, gamma, tiebreak, seed)
    return _finish(value, diag, detail)


# ---------------------------------------------------------------------------
# MME, IBO / IWO


def _inverse_exposure(data, k):
    """``w(u, i) = (1 / (W m)) * sum_w 1 / z(u, i, w)`` over top-k positions."""
    return data.position_matrix(k, position_weights("inverse", k)) / (data.W * data.m)


def impact_matrix(data, k):
    """Sparse ``n x n`` matrix of ``Imp_i(i') = sum_u r_{u,i} w(u, i')``."""
    return (data.grades.T.tocsr() @ _inverse_exposure(data, k)).tocsr()


def _mme(data, k):
    k = check_cutoff(k)
    imp = impact_matrix(data, k)
    best = imp.max(axis=1).toarray().ravel()
    envy = best - imp.diagonal()
    return envy.mean(), envy


def mme(run, rel, k=10, *, detail=False, data=None):
    """Mean max envy (lower is fairer).

    Item ``i`` envies ``i'`` by how much more impact it would get with the
    exposure allocation of ``i'``.  Exposure uses the inverse rank weight
    ``1 / p`` at each top-k position.  Computed as a sparse product, never
    materialising the dense ``n x n`` impact table.
    """
    value, envy = _mme(_prepare(run, rel, data), k)
    return _finish(value, envy, detail)


def _ibo_iwo(data, k, threshold):
    k = check_cutoff(k)
    if not threshold > 0:
        raise ConfigurationError("impact threshold must be > 0")
    R = data.grades
    own = np.asarray(R.multiply(_inverse_exposure(data, k)).sum(axis=0)).ravel()
    relsum = np.asarray(R.sum(axis=0)).ravel()
    harmonic = position_weights("inverse", k).sum()
    uniform = harmonic * relsum / (data.m * data.n)
    pool = np.diff(R.tocsc().indptr) > 0
    if not pool.any():
        raise DegenerateInputError("IBO/IWO undefined: no item is relevant to any user")
    better = pool & (own >= (1.0 + threshold) * uniform)
    worse = pool & (own <= (1.0 - threshold) * uniform)
    size = pool.sum()
    diag = {"own_impact": own, "uniform_impact": uniform, "better": better, "worse": worse}
    return better.sum() / size, worse.sum() / size, diag


def ibo_iwo(run, rel, k=10, threshold=0.1, *, detail=False, data=None):
    """Item better-off / worse-off fractions in [0, 1].

    Only items relevant to at least one user count.  An item is better off
    when its own impact is at least ``(1 + threshold)`` times its impact
    under a uniformly random ranking, worse off when at most
    ``(1 - threshold)`` times.

    Returns
    -------
    (ibo, iwo), or ``((ibo, iwo), diagnostics)`` with ``detail=True``
    """
    ibo, iwo, diag = _ibo_iwo(_prepare(run, rel, data), k, threshold)
    pair = (float(ibo), float(iwo))
    return (pair, diag) if detail else pair


# ---------------------------------------------------------------------------
# II-F, AI-F


def exposure_matrices(data, k, gamma):
    """System exposure ``E`` and target exposure ``E*``, both sparse ``m x n``."""
    k = check_cutoff(k)
    gamma = check_unit_interval(gamma, "gamma")
    E = data.position_matrix(k, position_weights(ExamSpec("rbp", gamma), k)) / data.W
    n_rel = data.n_relevant
    target = np.divide(
        1.0 - gamma ** n_rel.astype(float), (1.0 - gamma) * n_rel,
        out=np.zeros(data.m), where=n_rel > 0,
    )
    E_star = sp.diags(target) @ data.grades
    return E.tocsr(), E_star.tocsr()


def _iif(data, k, gamma):
    E, E_star = exposure_matrices(data, k, gamma)
    diff = (E - E_star).tocsr()
    # correctly rounded sums keep AI-F <= II-F exact when the two coincide (m = 1)
    sq = diff.data**2
    per_user = np.array([math.fsum(sq[a:b]) for a, b in zip(diff.indptr[:-1], diff.indptr[1:])]) / data.n
    return math.fsum(per_user) / data.m, per_user


def iif(run, rel, k=10, gamma=0.8, *, detail=False, data=None):
    """Individual-user-to-individual-item fairness (lower is fairer).

    Mean squared gap between RBP exposure and the target exposure of an
    ideal policy that spreads exposure evenly over each user's relevant
    items.
    """
    value, per_user = _iif(_prepare(run, rel, data), k, gamma)
    return _finish(value, per_user, detail)


def _aif(data, k, gamma):
    E, E_star = exposure_matrices(data, k, gamma)
    gap = np.asarray((E - E_star).sum(axis=0)).ravel() / data.m
    per_item = gap**2
    return math.fsum(per_item) / data.n, per_item


def aif(run, rel, k=10, gamma=0.8, *, detail=False, data=None):
    """All-users-to-individual-item fairness (lower is fairer).

    Like :func:`iif` but exposure is averaged over users before the squared
    gap is taken, so over- and under-exposure across users can cancel.
    """
    value, per_item = _aif(_prepare(run, rel, data), k, gamma)
    return _finish(value, per_item, detail)
