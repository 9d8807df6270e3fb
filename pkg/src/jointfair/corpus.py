"""Run and relevance data model, file formats, and joint alignment.

A run holds, for every (round, user), an ordered list of item indices.
Lists are stored densely as an int array of shape ``(W, m, depth)`` padded
with ``-1``; rank ``z`` of the item at column ``p`` is ``p + 1``.

Relevance grades live in a sparse ``m x n`` matrix.  Any (user, item) pair
that is not stored has grade 0.
"""

from __future__ import annotations

import contextlib
import warnings
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
import pandas as pd
import scipy.sparse as sp

from .base import DepthError, ParseError, SchemaError, StructuralError

RUN_COLUMNS = ("user", "item", "round", "rank", "score")
QRELS_COLUMNS = ("user", "item", "grade")


def _index_of(ids):
    return {key: idx for idx, key in enumerate(ids)}


def _check_lists(items, user_ids, round_ids):
    """Raise StructuralError on interior padding or duplicate items per list."""
    valid = items >= 0
    # padding must be a suffix: once -1 appears, everything after is -1
    gaps = valid[..., 1:] & ~valid[..., :-1]
    if gaps.any():
        w, u = np.nonzero(gaps.any(axis=-1))
        raise StructuralError(
            "non-contiguous ranks",
            [(user_ids[j], round_ids[i]) for i, j in zip(w, u)],
        )
    if items.shape[-1] < 2:
        return
    srt = np.sort(np.where(valid, items, -1 - np.arange(items.shape[-1])), axis=-1)
    dup = (srt[..., 1:] == srt[..., :-1]) & (srt[..., 1:] >= 0)
    if dup.any():
        w, u = np.nonzero(dup.any(axis=-1))
        raise StructuralError(
            "duplicate items within a list",
            [(user_ids[j], round_ids[i]) for i, j in zip(w, u)],
        )


@dataclass(frozen=True, eq=False)
class RunData:
    """Per-user, per-round ranked recommendation lists.

    Parameters
    ----------
    user_ids : sequence of str
        The ``m`` users that received lists.
    item_ids : sequence of str
        Item universe referenced by ``items``.
    items : ndarray of shape (W, m, depth)
        Item indices into ``item_ids`` in rank order, ``-1`` marks an empty
        slot.  Empty slots may only appear at the end of a list.
    scores : ndarray of shape (W, m, depth), optional
        Predicted scores aligned with ``items``; NaN where absent.
    round_ids : sequence of int, optional
        Labels of the ``W`` rounds, default ``1..W``.
    """

    user_ids: tuple
    item_ids: tuple
    items: np.ndarray
    scores: np.ndarray | None = None
    round_ids: tuple | None = None

    def __post_init__(self):
        items = np.asarray(self.items)
        if items.ndim != 3:
            raise ValueError("items must have shape (W, m, depth)")
        items = items.astype(np.int64, copy=False)
        W, m, _ = items.shape
        user_ids = tuple(str(u) for u in self.user_ids)
        item_ids = tuple(str(i) for i in self.item_ids)
        if len(user_ids) != m:
            raise ValueError(f"{len(user_ids)} user ids for {m} lists per round")
        if len(set(user_ids)) != m or len(set(item_ids)) != len(item_ids):
            raise ValueError("user and item ids must be unique")
        if items.size and (items.max() >= len(item_ids) or items.min() < -1):
            raise ValueError("item index out of range")
        round_ids = tuple(range(1, W + 1)) if self.round_ids is None else tuple(int(r) for r in self.round_ids)
        if len(round_ids) != W:
            raise ValueError("round_ids length must equal W")
        _check_lists(items, user_ids, round_ids)
        scores = self.scores
        if scores is not None:
            scores = np.asarray(scores, dtype=float)
            if scores.shape != items.shape:
                raise ValueError("scores must have the same shape as items")
            scores = np.where(items >= 0, scores, np.nan)
            scores.setflags(write=False)
        items = items.copy() if items is self.items else items
        items.setflags(write=False)
        object.__setattr__(self, "items", items)
        object.__setattr__(self, "scores", scores)
        object.__setattr__(self, "user_ids", user_ids)
        object.__setattr__(self, "item_ids", item_ids)
        object.__setattr__(self, "round_ids", round_ids)

    @classmethod
    def from_lists(cls, lists: Mapping, items: Sequence | None = None):
        """Build from ``{(user, round): [item, ...]}`` or ``{user: [...]}``.

        List entries may be bare items or ``(item, score)`` pairs.
        """
        norm = {}
        for key, seq in lists.items():
            user, rnd = key if isinstance(key, tuple) else (key, 1)
            norm[(str(user), int(rnd))] = list(seq)
        users = sorted({u for u, _ in norm})
        rounds = sorted({r for _, r in norm}) or [1]
        seen = set()
        for seq in norm.values():
            for entry in seq:
                seen.add(str(entry[0]) if isinstance(entry, tuple) else str(entry))
        universe = sorted(seen | {str(i) for i in (items or ())})
        iidx, uidx, ridx = _index_of(universe), _index_of(users), _index_of(rounds)
        depth = max((len(s) for s in norm.values()), default=0)
        arr = np.full((len(rounds), len(users), depth), -1, dtype=np.int64)
        sc = np.full(arr.shape, np.nan)
        has_scores = False
        for (user, rnd), seq in norm.items():
            w, u = ridx[rnd], uidx[user]
            for p, entry in enumerate(seq):
                if isinstance(entry, tuple):
                    arr[w, u, p] = iidx[str(entry[0])]
                    if entry[1] is not None:
                        sc[w, u, p] = float(entry[1])
                        has_scores = True
                else:
                    arr[w, u, p] = iidx[str(entry)]
        return cls(users, universe, arr, sc if has_scores else None, rounds)

    @property
    def n_rounds(self):
        return self.items.shape[0]

    @property
    def n_users(self):
        return self.items.shape[1]

    @property
    def depths(self):
        """Length of every list, shape ``(W, m)``."""
        return (self.items >= 0).sum(axis=-1)

    @property
    def depth(self):
        return int(self.depths.max()) if self.items.size else 0

    def require_depth(self, k):
        depths = self.depths
        short = depths < k
        if short.any():
            w, u = np.argwhere(short)[0]
            raise DepthError(self.user_ids[u], int(depths[w, u]), k, self.round_ids[w])

    def lists(self):
        """Yield ``(user, round, [item ids])`` in storage order."""
        for w, rnd in enumerate(self.round_ids):
            for u, user in enumerate(self.user_ids):
                row = self.items[w, u]
                yield user, rnd, [self.item_ids[i] for i in row[row >= 0]]

    def __eq__(self, other):
        if not isinstance(other, RunData):
            return NotImplemented
        if (self.user_ids, self.round_ids) != (other.user_ids, other.round_ids):
            return False
        mine, theirs = self.to_frame(), other.to_frame()
        return mine.equals(theirs)

    __hash__ = None

    def to_frame(self):
        """Long-format DataFrame with the run-file columns."""
        w, u, p = np.nonzero(self.items >= 0)
        item_ids = np.asarray(self.item_ids, dtype=object)
        frame = pd.DataFrame(
            {
                "user": np.asarray(self.user_ids, dtype=object)[u],
                "item": item_ids[self.items[w, u, p]],
                "round": np.asarray(self.round_ids, dtype=np.int64)[w],
                "rank": p + 1,
                "score": self.scores[w, u, p] if self.scores is not None else np.nan,
            }
        )
        return frame.reset_index(drop=True)


@dataclass(frozen=True, eq=False)
class RelevanceTable:
    """Sparse ground-truth grades in ``[0, 1]``; absent pairs have grade 0."""

    user_ids: tuple
    item_ids: tuple
    grades: sp.csr_matrix

    def __post_init__(self):
        grades = sp.csr_matrix(self.grades, dtype=float)
        grades.sum_duplicates()
        user_ids = tuple(str(u) for u in self.user_ids)
        item_ids = tuple(str(i) for i in self.item_ids)
        if grades.shape != (len(user_ids), len(item_ids)):
            raise ValueError("grades shape must be (n users, n items)")
        if grades.nnz and (grades.data.min() < 0 or grades.data.max() > 1):
            raise ValueError("grades must lie in [0, 1]")
        if len(set(user_ids)) != len(user_ids) or len(set(item_ids)) != len(item_ids):
            raise ValueError("user and item ids must be unique")
        grades.eliminate_zeros()
        object.__setattr__(self, "grades", grades)
        object.__setattr__(self, "user_ids", user_ids)
        object.__setattr__(self, "item_ids", item_ids)

    @classmethod
    def from_dict(cls, entries: Mapping, users=(), items=()):
        """Build from ``{(user, item): grade}``; extra ``users``/``items`` widen the universe."""
        user_ids = sorted({str(u) for u, _ in entries} | {str(u) for u in users})
        item_ids = sorted({str(i) for _, i in entries} | {str(i) for i in items})
        uidx, iidx = _index_of(user_ids), _index_of(item_ids)
        rows = [uidx[str(u)] for u, _ in entries]
        cols = [iidx[str(i)] for _, i in entries]
        data = [float(g) for g in entries.values()]
        mat = sp.csr_matrix((data, (rows, cols)), shape=(len(user_ids), len(item_ids)))
        return cls(user_ids, item_ids, mat)

    @property
    def n_relevant(self):
        """``|R*_u|``: number of items with grade > 0 per user."""
        return np.diff(self.grades.indptr)

    def __eq__(self, other):
        if not isinstance(other, RelevanceTable):
            return NotImplemented
        return (
            self.user_ids == other.user_ids
            and self.item_ids == other.item_ids
            and (self.grades != other.grades).nnz == 0
        )

    __hash__ = None


# ---------------------------------------------------------------------------
# File formats


def _read_tsv(path, n_cols, names):
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(path)
    raw = pd.read_csv(
        path, sep="\t", header=None, dtype=str, keep_default_na=False,
        comment="#", skip_blank_lines=True, names=range(max(n_cols)),
        engine="python",
    )
    # pandas drops comment and blank lines; recover physical line numbers
    lines = []
    with open(path, encoding="utf-8") as fh:
        for lineno, text in enumerate(fh, start=1):
            stripped = text.strip()
            if stripped and not stripped.startswith("#"):
                lines.append(lineno)
    raw.index = lines[: len(raw)]
    if len(raw) and raw.iloc[0, 0].strip().lower() == names[0]:
        raw = raw.iloc[1:]
    return raw


def load_run(path) -> RunData:
    """Read a run file (``user, item, round, rank, score`` tab-separated).

    ``round`` defaults to 1 when empty or missing, ``score`` may be empty.
    A header row whose first field is ``user`` is skipped.
    """
    try:
        raw = _read_tsv(path, (5,), RUN_COLUMNS)
    except pd.errors.ParserError as exc:
        raise ParseError(str(exc)) from exc
    raw = raw.fillna("")
    if raw.empty:
        return RunData((), (), np.zeros((1, 0, 0), dtype=np.int64))
    users = raw[0].str.strip()
    items = raw[1].str.strip()
    if (users == "").any() or (items == "").any():
        bad = raw.index[(users == "") | (items == "")][0]
        raise ParseError("missing user or item", bad)
    rnd_txt = raw[2].str.strip().replace("", "1")
    rounds = pd.to_numeric(rnd_txt, errors="coerce")
    ranks = pd.to_numeric(raw[3].str.strip(), errors="coerce")
    scores = _to_float(raw[4].str.strip().replace("", "nan"))
    for series, what in ((rounds, "round"), (ranks, "rank")):
        bad = series.isna() | (series != series.round())
        if bad.any():
            raise ParseError(f"invalid {what}", raw.index[bad.to_numpy()][0])
    bad_score = (scores.isna() & (raw[4].str.strip() != "") & (raw[4].str.strip().str.lower() != "nan")) | np.isinf(scores)
    if bad_score.any():
        raise ParseError("invalid score", raw.index[bad_score.to_numpy()][0])
    frame = pd.DataFrame(
        {"user": users.to_numpy(), "item": items.to_numpy(),
         "round": rounds.astype(np.int64).to_numpy(), "rank": ranks.astype(np.int64).to_numpy(),
         "score": scores.to_numpy(dtype=float)}
    )
    return run_from_frame(frame)


def run_from_frame(frame: pd.DataFrame, items: Sequence | None = None) -> RunData:
    """Build a RunData from a long-format frame with the run-file columns."""
    missing = set(RUN_COLUMNS[:2]) - set(frame.columns)
    if missing:
        raise SchemaError(f"missing columns: {sorted(missing)}")
    frame = frame.copy()
    if "round" not in frame:
        frame["round"] = 1
    if "score" not in frame:
        frame["score"] = np.nan
    if "rank" not in frame:
        frame["rank"] = frame.groupby(["user", "round"], sort=False).cumcount() + 1
    frame["user"] = frame["user"].astype(str)
    frame["item"] = frame["item"].astype(str)

    dup = frame.duplicated(["user", "round", "item"], keep=False)
    if dup.any():
        offenders = sorted(set(zip(frame.loc[dup, "user"], frame.loc[dup, "round"])))
        raise StructuralError("duplicate items within a list", offenders)
    frame = frame.sort_values(["user", "round", "rank"], kind="stable")
    expected = frame.groupby(["user", "round"], sort=False).cumcount() + 1
    gaps = frame["rank"].to_numpy() != expected.to_numpy()
    if gaps.any():
        offenders = sorted(set(zip(frame.loc[gaps, "user"], frame.loc[gaps, "round"])))
        raise StructuralError("rank gaps or duplicate ranks", offenders)

    user_ids = sorted(frame["user"].unique())
    item_ids = sorted(set(frame["item"].unique()) | {str(i) for i in (items or ())})
    round_ids = sorted(int(r) for r in frame["round"].unique())
    uidx = pd.Index(user_ids).get_indexer(frame["user"])
    iidx = pd.Index(item_ids).get_indexer(frame["item"])
    widx = pd.Index(round_ids).get_indexer(frame["round"])
    depth = int(frame["rank"].max())
    arr = np.full((len(round_ids), len(user_ids), depth), -1, dtype=np.int64)
    pos = frame["rank"].to_numpy() - 1
    arr[widx, uidx, pos] = iidx
    scores = None
    score_vals = frame["score"].to_numpy(dtype=float)
    if not np.isnan(score_vals).all():
        scores = np.full(arr.shape, np.nan)
        scores[widx, uidx, pos] = score_vals
    return RunData(user_ids, item_ids, arr, scores, round_ids)


def _to_float(text):
    """Exact (round-tripping) float parse of a string Series; NaN where invalid."""

    def parse(value):
        try:
            return float(value)
        except ValueError:
            return np.nan

    return text.map(parse).astype(float)


def _format_float(x):
    return "" if x is None or np.isnan(x) else repr(float(x))


@contextlib.contextmanager
def _opened(target):
    if hasattr(target, "write"):
        yield target
    else:
        with open(target, "w", encoding="utf-8", newline="\n") as fh:
            yield fh


def write_run(run: RunData, path):
    """Write a run file (path or text stream) with a header row; scores at full precision."""
    frame = run.to_frame()
    with _opened(path) as fh:
        fh.write("\t".join(RUN_COLUMNS) + "\n")
        for user, item, rnd, rank, score in frame.itertuples(index=False):
            fh.write(f"{user}\t{item}\t{rnd}\t{rank}\t{_format_float(score)}\n")


def load_qrels(path) -> RelevanceTable:
    """Read a qrels file (``user, item, grade`` tab-separated, grade in [0, 1]).

    Rows with grade 0 are kept in the user/item universe.
    """
    try:
        raw = _read_tsv(path, (3,), QRELS_COLUMNS)
    except pd.errors.ParserError as exc:
        raise ParseError(str(exc)) from exc
    raw = raw.fillna("")
    if raw.empty:
        return RelevanceTable((), (), sp.csr_matrix((0, 0)))
    users = raw[0].str.strip()
    items = raw[1].str.strip()
    grades = _to_float(raw[2].str.strip())
    bad = grades.isna() | (grades < 0) | (grades > 1) | (users == "") | (items == "")
    if bad.any():
        raise ParseError("grade must be a number in [0, 1]", raw.index[bad.to_numpy()][0])
    dup = pd.DataFrame({"u": users, "i": items}).duplicated(keep="first")
    if dup.any():
        raise ParseError("duplicate (user, item) pair", raw.index[dup.to_numpy()][0])
    user_ids = sorted(users.unique())
    item_ids = sorted(items.unique())
    mat = sp.csr_matrix(
        (grades.to_numpy(dtype=float),
         (pd.Index(user_ids).get_indexer(users), pd.Index(item_ids).get_indexer(items))),
        shape=(len(user_ids), len(item_ids)),
    )
    return RelevanceTable(user_ids, item_ids, mat)


def write_qrels(rel: RelevanceTable, path):
    coo = rel.grades.tocoo()
    order = np.lexsort((coo.col, coo.row))
    with _opened(path) as fh:
        fh.write("\t".join(QRELS_COLUMNS) + "\n")
        for r, c, g in zip(coo.row[order], coo.col[order], coo.data[order]):
            fh.write(f"{rel.user_ids[r]}\t{rel.item_ids[c]}\t{repr(float(g))}\n")


# ---------------------------------------------------------------------------
# Validation and alignment


@dataclass
class ValidationReport:
    unknown_users: list = field(default_factory=list)
    unknown_items: list = field(default_factory=list)
    depth_histogram: dict = field(default_factory=dict)
    user_depth: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)

    @property
    def ok(self):
        return not self.warnings


def validate(run: RunData, rel: RelevanceTable | None = None) -> ValidationReport:
    """Check a run against a relevance table.

    Structural problems (duplicates, rank gaps) cannot survive RunData
    construction and raise there.  Users or items unknown to the relevance
    table are reported as warnings; they are evaluated with grade 0.
    """
    report = ValidationReport()
    depths = run.depths
    report.depth_histogram = dict(sorted(Counter(depths.ravel().tolist()).items()))
    mins = depths.min(axis=0) if depths.size else np.zeros(run.n_users, dtype=int)
    report.user_depth = {u: int(d) for u, d in zip(run.user_ids, mins)}
    if rel is not None:
        known_users, known_items = set(rel.user_ids), set(rel.item_ids)
        used = np.unique(run.items[run.items >= 0])
        report.unknown_users = [u for u in run.user_ids if u not in known_users]
        report.unknown_items = [run.item_ids[i] for i in used if run.item_ids[i] not in known_items]
        if report.unknown_users:
            report.warnings.append(
                f"{len(report.unknown_users)} run users absent from relevance table (treated as having no relevant items)"
            )
        if report.unknown_items:
            report.warnings.append(
                f"{len(report.unknown_items)} run items absent from relevance table (treated as grade 0)"
            )
    return report


class Aligned:
    """Run and relevance re-indexed onto a shared user/item universe.

    Users are the run's users (``m``).  Items are the union of the relevance
    table's item universe and the run's items (``n``), sorted by id, so the
    dense index order equals item-id order.
    """

    def __init__(self, run: RunData, rel: RelevanceTable):
        self.report = validate(run, rel)
        for msg in self.report.warnings:
            warnings.warn(msg, stacklevel=3)
        item_ids = sorted(set(rel.item_ids) | set(run.item_ids))
        item_index = pd.Index(item_ids)
        run_map = np.append(item_index.get_indexer(list(run.item_ids)), -1)
        self.items = run_map[run.items]  # -1 stays -1 via the appended slot
        self.user_ids = run.user_ids
        self.item_ids = tuple(item_ids)
        self.round_ids = run.round_ids
        self.scores = run.scores
        self.W, self.m = run.items.shape[:2]
        self.n = len(item_ids)
        self.depths = run.depths

        # relevance rows for run users, columns in joint item order
        rel_rows = pd.Index(rel.user_ids).get_indexer(list(run.user_ids))
        rel_cols = item_index.get_indexer(list(rel.item_ids))
        coo = rel.grades.tocoo()
        row_map = np.full(len(rel.user_ids), -1, dtype=np.int64)
        row_map[rel_rows[rel_rows >= 0]] = np.nonzero(rel_rows >= 0)[0]
        keep = row_map[coo.row] >= 0
        self.grades = sp.csr_matrix(
            (coo.data[keep], (row_map[coo.row[keep]], rel_cols[coo.col[keep]])),
            shape=(self.m, self.n),
        )
        self.grades.sort_indices()
        self.n_relevant = np.diff(self.grades.indptr)

    def top(self, k):
        """Top-k item indices, shape ``(W, m, k)``; raises DepthError if short."""
        short = self.depths < k
        if short.any():
            w, u = np.argwhere(short)[0]
            raise DepthError(self.user_ids[u], int(self.depths[w, u]), k, self.round_ids[w])
        return self.items[:, :, :k]

    def grade_of(self, users, items):
        """Vectorised grade lookup for index arrays of equal shape."""
        users = np.asarray(users)
        items = np.asarray(items)
        flat_u, flat_i = users.ravel(), items.ravel()
        out = np.zeros(flat_u.shape, dtype=float)
        ok = flat_i >= 0
        if ok.any():
            out[ok] = np.asarray(self.grades[flat_u[ok], flat_i[ok]]).ravel()
        return out.reshape(users.shape)

    def top_grades(self, k):
        top = self.top(k)
        users = np.broadcast_to(np.arange(self.m)[None, :, None], top.shape)
        return self.grade_of(users, top)

    def position_matrix(self, k, weights):
        """Sparse ``m x n`` matrix summing ``weights[p]`` over rounds at (u, top[w,u,p])."""
        top = self.top(k)
        W, m, _ = top.shape
        rows = np.broadcast_to(np.arange(m)[None, :, None], top.shape).ravel()
        vals = np.broadcast_to(np.asarray(weights, dtype=float)[None, None, :], top.shape).ravel()
        return sp.csr_matrix((vals, (rows, top.ravel())), shape=(m, self.n))
