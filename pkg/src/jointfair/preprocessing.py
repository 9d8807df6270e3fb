"""Interaction loading and dataset preparation.

Interactions are a DataFrame with columns ``user``, ``item``, ``rating``
and ``timestamp``; the last two may be all-NaN for implicit feedback
without time information.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd
from sklearn.base import BaseEstimator, TransformerMixin

from .base import ConfigurationError, ParseError, SchemaError
from .corpus import RelevanceTable, _to_float

INTERACTION_COLUMNS = ("user", "item", "rating", "timestamp")


def load_interactions(path, columns=None, sep=None, header=True, rating_range=None):
    """Read a delimiter-separated interactions file.

    Parameters
    ----------
    path : str or Path
    columns : sequence of str or dict, optional
        Without a header, the role of each file column in order (``user``,
        ``item``, ``rating``, ``timestamp`` or ``None`` to ignore).  With a
        header, an optional ``{role: header_name}`` mapping; by default the
        header must use the role names.
    sep : str, optional
        Field delimiter; inferred from the extension (``.csv`` -> comma,
        otherwise tab).
    header : bool, default True
    rating_range : (float, float), optional
        Inclusive bounds every rating must satisfy.

    Returns
    -------
    DataFrame
        One row per interaction.  Duplicate (user, item) pairs keep the
        most recent timestamp (the last row when there are no timestamps).
    """
    path = Path(path)
    if sep is None:
        sep = "," if path.suffix.lower() == ".csv" else "\t"
    raw = pd.read_csv(path, sep=sep, header=0 if header else None, dtype=str, keep_default_na=False)
    first_line = 2 if header else 1
    if header:
        mapping = dict(columns) if isinstance(columns, dict) else {r: r for r in INTERACTION_COLUMNS if r in raw.columns}
    else:
        if columns is None:
            columns = INTERACTION_COLUMNS[: raw.shape[1]]
        mapping = {role: pos for pos, role in enumerate(columns) if role is not None}
    for role in ("user", "item"):
        if role not in mapping or mapping[role] not in raw.columns:
            raise SchemaError(f"missing required column {role!r}")

    frame = pd.DataFrame({"user": raw[mapping["user"]].str.strip(), "item": raw[mapping["item"]].str.strip()})
    for role in ("rating", "timestamp"):
        if role in mapping:
            text = raw[mapping[role]].str.strip()
            values = _to_float(text.replace("", "nan"))
            bad = values.isna() & (text != "")
            if bad.any():
                raise ParseError(f"invalid {role} {text[bad].iloc[0]!r}", int(np.nonzero(bad.to_numpy())[0][0]) + first_line)
            frame[role] = values.astype(float)
        else:
            frame[role] = np.nan
    empty = (frame["user"] == "") | (frame["item"] == "")
    if empty.any():
        raise ParseError("missing user or item", int(np.nonzero(empty.to_numpy())[0][0]) + first_line)
    if rating_range is not None:
        lo, hi = rating_range
        out = frame["rating"].notna() & ((frame["rating"] < lo) | (frame["rating"] > hi))
        if out.any():
            raise ParseError(f"rating outside [{lo}, {hi}]", int(np.nonzero(out.to_numpy())[0][0]) + first_line)
    return deduplicate(frame)


def deduplicate(frame):
    """Keep the most recent interaction per (user, item); ties keep the later row."""
    order = frame.assign(_row=np.arange(len(frame)))
    if order["timestamp"].notna().any():
        order = order.sort_values(["timestamp", "_row"], kind="stable", na_position="first")
    kept = order.drop_duplicates(["user", "item"], keep="last").sort_values("_row")
    return kept.drop(columns="_row").reset_index(drop=True)


def binarize(frame, threshold=3.0):
    """Keep ratings ``>= threshold`` as grade 1 and drop the rest.

    Frames without ratings (implicit feedback) are returned unchanged.
    """
    if "rating" not in frame or frame["rating"].isna().all():
        return frame
    kept = frame[frame["rating"] >= threshold].copy()
    kept["rating"] = 1.0
    return kept.reset_index(drop=True)


def kcore_filter(frame, c=5):
    """Drop users and items with fewer than ``c`` interactions until none remain."""
    if c < 1:
        raise ConfigurationError("c must be >= 1")
    current = frame
    while True:
        users = current["user"].map(current["user"].value_counts())
        items = current["item"].map(current["item"].value_counts())
        keep = (users >= c) & (items >= c)
        if keep.all():
            return current.reset_index(drop=True)
        current = current[keep]


class RatingBinarizer(BaseEstimator, TransformerMixin):
    def __init__(self, threshold=3.0):
        self.threshold = threshold

    def fit(self, X, y=None):
        return self

    def transform(self, X):
        return binarize(X, self.threshold)


class KCoreFilter(BaseEstimator, TransformerMixin):
    def __init__(self, c=5):
        self.c = c

    def fit(self, X, y=None):
        return self

    def transform(self, X):
        return kcore_filter(X, self.c)


@dataclass
class SplitBundle:
    train: pd.DataFrame
    validation: pd.DataFrame
    test: pd.DataFrame
    dropped: pd.DataFrame
    ratios: tuple


def split(frame, ratios=(0.6, 0.2, 0.2), mode="temporal", seed=0, min_train=5):
    """Global (not per-user) train/validation/test split.

    ``temporal`` orders all interactions by timestamp, ties kept in input
    order; ``random`` uses a seeded shuffle.  Users with fewer than
    ``min_train`` training interactions are then removed from every part
    and collected in ``dropped``.
    """
    ratios = tuple(float(r) for r in ratios)
    if len(ratios) != 3 or min(ratios) < 0 or not np.isclose(sum(ratios), 1.0):
        raise ConfigurationError("ratios must be three non-negative numbers summing to 1")
    if mode == "temporal":
        if "timestamp" not in frame or frame["timestamp"].isna().any():
            raise ConfigurationError("temporal split needs a timestamp on every interaction")
        ordered = frame.sort_values("timestamp", kind="stable")
    elif mode == "random":
        ordered = frame.iloc[np.random.default_rng(seed).permutation(len(frame))]
    else:
        raise ConfigurationError(f"unknown split mode {mode!r}")
    total = len(ordered)
    n_train = int(round(ratios[0] * total))
    n_val = int(round(ratios[1] * total))
    train = ordered.iloc[:n_train]
    val = ordered.iloc[n_train:n_train + n_val]
    test = ordered.iloc[n_train + n_val:]

    counts = train["user"].value_counts()
    keep_users = set(counts.index[counts >= min_train])
    parts = []
    dropped = []
    for part in (train, val, test):
        mask = part["user"].isin(keep_users)
        parts.append(part[mask].reset_index(drop=True))
        dropped.append(part[~mask])
    return SplitBundle(*parts, pd.concat(dropped).reset_index(drop=True), ratios)


def interactions_to_qrels(frame):
    """RelevanceTable from interactions; ratings become grades (1 when absent)."""
    grades = frame["rating"].fillna(1.0) if "rating" in frame else pd.Series(1.0, index=frame.index)
    return RelevanceTable.from_dict(dict(zip(zip(frame["user"], frame["item"]), grades.clip(0, 1))))
