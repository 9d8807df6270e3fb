"""Diagnostic experiments: measure agreement, rank sensitivity, artificial insertion.

Also holds the synthetic data generators these experiments run on.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
import scipy.sparse as sp
from scipy import stats

from .base import ConfigurationError, DegenerateInputError, DepthError, check_cutoff
from .corpus import RelevanceTable, RunData
from .evaluate import ALL_MEASURES, HIGHER_IS_BETTER, FairRelEvaluator, ScoreReport

# ---------------------------------------------------------------------------
# Agreement between measures


def kendall_tau(a, b):
    """Tie-corrected Kendall tau-b between two score vectors over the same systems."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("score vectors must be 1-d and the same length")
    if len(a) < 2:
        raise DegenerateInputError("Kendall tau needs at least two systems")
    if np.all(a == a[0]) or np.all(b == b[0]):
        raise DegenerateInputError("Kendall tau undefined: all scores tied on one side")
    return float(stats.kendalltau(a, b, variant="b").statistic)


@dataclass
class ScoreTable:
    """Systems (rows) by measures (columns) with per-measure orientation."""

    frame: pd.DataFrame
    higher_is_better: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.higher_is_better:
            self.higher_is_better = {m: HIGHER_IS_BETTER.get(m, True) for m in self.frame.columns}
        values = self.frame.to_numpy(dtype=float)
        if not np.all(np.isfinite(values)):
            raise ValueError("score table cells must be finite")

    @classmethod
    def from_reports(cls, reports):
        reports = list(reports)
        measures = [m for m in ALL_MEASURES if all(m in r.scores for r in reports)]
        labels = [r.label for r in reports]
        if len(set(labels)) != len(labels):
            labels = [f"{r.label}#{i}" for i, r in enumerate(reports)]
        frame = pd.DataFrame([[r.scores[m] for m in measures] for r in reports], index=labels, columns=measures)
        return cls(frame)


def correlation_matrix(table, oriented=True):
    """Pairwise Kendall tau-b between the system orderings each measure induces.

    With ``oriented`` the lower-is-better measures are negated first, so a
    positive tau means two measures agree on which systems are better.
    Undefined pairs (a measure constant across systems) are NaN; the
    diagonal is 1.
    """
    if isinstance(table, pd.DataFrame):
        table = ScoreTable(table)
    frame = table.frame
    if len(frame) < 2:
        raise DegenerateInputError("correlation needs at least two systems")
    sign = {m: (1.0 if table.higher_is_better.get(m, True) or not oriented else -1.0) for m in frame.columns}
    cols = {m: sign[m] * frame[m].to_numpy(dtype=float) for m in frame.columns}
    names = list(frame.columns)
    out = np.full((len(names), len(names)), np.nan)
    for i, a in enumerate(names):
        out[i, i] = 1.0
        for j in range(i + 1, len(names)):
            try:
                tau = kendall_tau(cols[a], cols[names[j]])
            except DegenerateInputError:
                continue
            out[i, j] = out[j, i] = tau
    return pd.DataFrame(out, index=names, columns=names)


# ---------------------------------------------------------------------------
# Synthetic data


def _ids(prefix, count):
    width = len(str(max(count - 1, 0)))
    return [f"{prefix}{j:0{width}d}" for j in range(count)]


def synthetic_popularity_run(m, n, k=10, skew=1.0, seed=0, depth=None, relevant_per_user=None,
                             noise=1.0, bias=2.0, grade_levels=None):
    """Seeded run and ground truth with popularity bias.

    Each user's utility for an item is its log-popularity (Zipf with
    exponent ``skew`` over a random item order) plus Gumbel taste noise.
    The ``relevant_per_user`` highest-utility items are relevant (default
    ``2 * k``), so popular items are relevant more often.  The system
    scores items by utility plus ``bias`` times the unscaled log-popularity
    plus Gaussian error of scale ``noise``, so it over-recommends popular
    items the way a trained model does.

    Relevant items get grade 1 unless ``grade_levels`` is given, in which
    case each relevant pair draws its grade uniformly from those levels
    (all in (0, 1]), like ratings mapped onto a graded scale.

    Returns
    -------
    (RunData, RelevanceTable)
    """
    if skew < 0 or bias < 0 or noise < 0:
        raise ConfigurationError("skew, bias and noise must be >= 0")
    k = check_cutoff(k)
    depth = n if depth is None else check_cutoff(depth, "depth")
    if depth > n:
        raise ConfigurationError("depth cannot exceed n")
    n_rel = 2 * k if relevant_per_user is None else int(relevant_per_user)
    if not 0 < n_rel <= n:
        raise ConfigurationError("relevant_per_user must be in 1..n")
    rng = np.random.default_rng(seed)
    popularity_rank = rng.permutation(n)
    log_pop = -np.log1p(popularity_rank)
    utility = skew * log_pop[None, :] + rng.gumbel(size=(m, n))
    predicted = utility + bias * log_pop[None, :] + noise * rng.standard_normal((m, n))

    relevant = np.argpartition(-utility, n_rel - 1, axis=1)[:, :n_rel]
    if grade_levels is None:
        values = np.ones(m * n_rel)
    else:
        levels = np.asarray(grade_levels, dtype=float)
        if levels.size == 0 or np.any((levels <= 0) | (levels > 1)):
            raise ConfigurationError("grade_levels must lie in (0, 1]")
        values = rng.choice(levels, size=m * n_rel)
    grades = sp.csr_matrix(
        (values, (np.repeat(np.arange(m), n_rel), relevant.ravel())), shape=(m, n)
    )
    order = np.argsort(-predicted, axis=1, kind="stable")[:, :depth]
    scores = np.take_along_axis(predicted, order, axis=1)
    users, items = _ids("u", m), _ids("i", n)
    run = RunData(users, items, order[None], scores[None])
    return run, RelevanceTable(users, items, grades)


# ---------------------------------------------------------------------------
# Sliding windows


def window_run(run: RunData, start, window=5):
    """Rotate every list so ranks ``start..start+window-1`` come first.

    The items above ``start`` move to the end, which keeps full rankings
    full; measures cut at ``k = window`` only see the window.
    """
    start = check_cutoff(start, "start")
    need = start + window - 1
    depths = run.depths
    short = depths < need
    if short.any():
        w, u = np.argwhere(short)[0]
        raise DepthError(run.user_ids[u], int(depths[w, u]), need, run.round_ids[w])
    cols = np.arange(run.items.shape[-1])
    d = depths[..., None]
    src = np.where(cols < d, (cols + start - 1) % np.maximum(d, 1), cols)
    items = np.take_along_axis(run.items, src, axis=-1)
    scores = None if run.scores is None else np.take_along_axis(run.scores, src, axis=-1)
    return RunData(run.user_ids, run.item_ids, items, scores, run.round_ids)


def sliding_windows(run, rel, window=5, starts=range(1, 6), **params):
    """Evaluate every measure at ``k = window`` on each rotated window.

    Returns
    -------
    dict of start -> ScoreReport
    """
    starts = list(starts)
    if starts:
        run.require_depth(max(starts) + window - 1)
    params.setdefault("k", window)
    evaluator = FairRelEvaluator(**params).fit(rel)
    return {s: evaluator.evaluate(window_run(run, s, window), label=f"{s}-{s + window - 1}") for s in starts}


# ---------------------------------------------------------------------------
# Artificial insertion


@dataclass
class InsertionTrajectory:
    steps: list
    params: dict

    def to_frame(self):
        """Long format: one row per (step, measure)."""
        rows = [(t, m, v) for t, rep in self.steps for m, v in rep.scores.items()]
        return pd.DataFrame(rows, columns=["step", "measure", "value"])

    def to_csv(self):
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["step", "measure", "value"])
        for t, rep in self.steps:
            for m, v in rep.scores.items():
                writer.writerow([t, m, repr(float(v))])
        return buf.getvalue()

    def to_json(self):
        body = {"params": self.params, "steps": [{"step": t, **rep.to_dict()} for t, rep in self.steps]}
        return json.dumps(body, indent=2, allow_nan=False) + "\n"

    def series(self, measure):
        return np.array([rep.scores[measure] for _, rep in self.steps])


class InsertionDesign:
    """Construction behind the artificial-insertion experiment.

    All users start with the same ``k`` shared items.  They are relevant to
    exactly one (seed-chosen) user, whose list never changes.  Every other
    user owns ``k`` dedicated relevant items; at step ``t`` the item at rank
    ``k - t + 1`` is replaced by the user's ``t``-th dedicated item.  After
    ``k`` steps the top-k lists cover ``k * m`` distinct items, each
    relevant only to the user it is shown to.  Lists are full rankings: the
    top-k is followed by all other items in index order.
    """

    def __init__(self, m=1000, n=10000, k=10, seed=0):
        self.m, self.n, self.k = int(m), int(n), check_cutoff(k)
        if self.m < 1 or self.n < self.k * self.m:
            raise ConfigurationError("insertion needs n >= k * m and m >= 1")
        rng = np.random.default_rng(seed)
        perm = rng.permutation(self.n)
        self.special_user = int(rng.integers(self.m))
        self.shared = perm[: self.k]
        others = [u for u in range(self.m) if u != self.special_user]
        self.dedicated = np.empty((self.m, self.k), dtype=np.int64)
        self.dedicated[self.special_user] = self.shared
        self.dedicated[others] = perm[self.k: self.k * self.m].reshape(len(others), self.k)
        self.user_ids = _ids("u", self.m)
        self.item_ids = _ids("i", self.n)

    def relevance(self):
        rows = np.repeat(np.arange(self.m), self.k)
        grades = sp.csr_matrix((np.ones(self.m * self.k), (rows, self.dedicated.ravel())), shape=(self.m, self.n))
        return RelevanceTable(self.user_ids, self.item_ids, grades)

    def top_lists(self, step):
        if not 0 <= step <= self.k:
            raise ConfigurationError(f"step must be in 0..{self.k}")
        top = np.tile(self.shared, (self.m, 1))
        for t in range(1, step + 1):
            top[:, self.k - t] = self.dedicated[:, t - 1]
        top[self.special_user] = self.shared
        return top

    def run(self, step):
        top = self.top_lists(step)
        rest = np.ones((self.m, self.n), dtype=bool)
        rest[np.arange(self.m)[:, None], top] = False
        tail = np.nonzero(rest)[1].reshape(self.m, self.n - self.k)
        full = np.concatenate([top, tail], axis=1)
        return RunData(self.user_ids, self.item_ids, full[None])


def insertion_sim(m=1000, n=10000, k=10, seed=0, measures=None, **params):
    """Run the artificial-insertion experiment and score every step."""
    design = InsertionDesign(m, n, k, seed)
    evaluator = FairRelEvaluator(k=k, measures=measures, **params).fit(design.relevance())
    steps = [(t, evaluator.evaluate(design.run(t), label=f"step{t}")) for t in range(k + 1)]
    info = {"m": m, "n": n, "k": k, "seed": seed, "special_user": design.user_ids[design.special_user]}
    return InsertionTrajectory(steps, info)
