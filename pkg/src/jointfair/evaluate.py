"""Evaluate a run on all 20 measures and serialise the result."""

from __future__ import annotations

import csv
import io
import json
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

from sklearn.base import BaseEstimator

from .base import ConfigurationError, EvaluationError, check_cutoff, check_unit_interval
from .corpus import Aligned, RelevanceTable, RunData
from .fairness import FAIR_MEASURES, exposure_counts, fair_eval
from .joint import JOINT_MEASURES, TIEBREAKS, _aif, _hd, _iaa, _ibo_iwo, _ifd_div, _ifd_mul, _iif, _mme
from .relevance import REL_MEASURES, rel_eval

ALL_MEASURES = REL_MEASURES + FAIR_MEASURES + JOINT_MEASURES

HIGHER_IS_BETTER = {
    **dict.fromkeys(REL_MEASURES, True),
    "Jain": True, "QF": True, "Ent": True, "FSat": True, "Gini": False,
    **dict.fromkeys(JOINT_MEASURES, False),
    "IBO": True,
}

MEASURE_GROUPS = {
    **dict.fromkeys(REL_MEASURES, "Rel"),
    **dict.fromkeys(FAIR_MEASURES, "Fair"),
    **dict.fromkeys(JOINT_MEASURES, "Fair+Rel"),
}

_ALIASES = {"IFD÷": "IFD_div", "IFD×": "IFD_mul", "IIF": "II-F", "AIF": "AI-F", "ENTROPY": "Ent"}


def resolve_measures(names):
    """Canonical measure names, in registry order; accepts case-insensitive aliases."""
    if names is None:
        return ALL_MEASURES
    if isinstance(names, str):
        names = [n for n in names.split(",") if n.strip()]
    lookup = {m.upper(): m for m in ALL_MEASURES}
    lookup.update({k.upper(): v for k, v in _ALIASES.items()})
    wanted = set()
    for name in names:
        key = name.strip().upper()
        if key not in lookup:
            raise ConfigurationError(f"unknown measure {name!r}; known: {', '.join(ALL_MEASURES)}")
        wanted.add(lookup[key])
    return tuple(m for m in ALL_MEASURES if m in wanted)


@dataclass
class ScoreReport:
    """Scores of one run under one configuration."""

    label: str
    config: dict
    scores: dict
    diagnostics: dict = field(default_factory=dict)

    @property
    def orientation(self):
        return {m: HIGHER_IS_BETTER[m] for m in self.scores}

    def to_dict(self):
        return {
            "label": self.label,
            "config": self.config,
            "scores": self.scores,
            "higher_is_better": self.orientation,
            "diagnostics": self.diagnostics,
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, allow_nan=False) + "\n"

    def to_csv(self):
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["label", "measure", "group", "higher_is_better", "value"])
        for name, value in self.scores.items():
            writer.writerow([self.label, name, MEASURE_GROUPS[name], int(HIGHER_IS_BETTER[name]), repr(float(value))])
        return buf.getvalue()

    def write(self, path, fmt="json"):
        path = Path(path)
        path.write_text(self.to_json() if fmt == "json" else self.to_csv(), encoding="utf-8")

    @classmethod
    def read(cls, path):
        """Load a report written by :meth:`write` (JSON or CSV)."""
        path = Path(path)
        text = path.read_text(encoding="utf-8")
        if text.lstrip().startswith("{"):
            d = json.loads(text)
            return cls(d["label"], d.get("config", {}), dict(d["scores"]), d.get("diagnostics", {}))
        rows = list(csv.DictReader(io.StringIO(text)))
        if not rows:
            raise ValueError(f"{path}: empty report")
        return cls(rows[0]["label"], {}, {r["measure"]: float(r["value"]) for r in rows})


class FairRelEvaluator(BaseEstimator):
    """Score runs against a fixed relevance table.

    ``fit`` stores the ground truth; ``evaluate`` scores one run.  The
    constructor parameters are the whole evaluation configuration and are
    echoed into every report.

    Parameters
    ----------
    k : int, default 10
        Cutoff for every measure except IFD_div, which reads full rankings.
    gamma_hd : float, default 0.9
        Patience of the HD click model.
    gamma_iif : float, default 0.8
        RBP patience for II-F and AI-F.
    impact_threshold : float, default 0.1
        Relative impact gain or loss that makes an item better or worse off.
    hd_tiebreak : {"deterministic", "random"}
        Tie-breaking of equal grades in the HD reference list.
    seed : int, optional
        Seed for ``hd_tiebreak="random"``.
    measures : sequence of str, optional
        Subset of measures to compute; default all 20.
    skip_unavailable : bool, default False
        Leave out measures whose input requirements fail (e.g. IFD_div on
        a truncated run) instead of raising; skipped names are recorded in
        the diagnostics.
    """

    def __init__(self, k=10, gamma_hd=0.9, gamma_iif=0.8, impact_threshold=0.1,
                 hd_tiebreak="deterministic", seed=None, measures=None, skip_unavailable=False):
        self.k = k
        self.gamma_hd = gamma_hd
        self.gamma_iif = gamma_iif
        self.impact_threshold = impact_threshold
        self.hd_tiebreak = hd_tiebreak
        self.seed = seed
        self.measures = measures
        self.skip_unavailable = skip_unavailable

    def _validate_params(self):
        check_cutoff(self.k)
        check_unit_interval(self.gamma_hd, "gamma_hd")
        check_unit_interval(self.gamma_iif, "gamma_iif")
        if not self.impact_threshold > 0:
            raise ConfigurationError("impact_threshold must be > 0")
        if self.hd_tiebreak not in TIEBREAKS:
            raise ConfigurationError(f"hd_tiebreak must be one of {TIEBREAKS}")
        return resolve_measures(self.measures)

    def fit(self, rel: RelevanceTable, y=None):
        if not isinstance(rel, RelevanceTable):
            raise TypeError("fit expects a RelevanceTable")
        self.measures_ = self._validate_params()
        self.relevance_ = rel
        return self

    def config(self):
        return {
            "k": self.k, "gamma_hd": self.gamma_hd, "gamma_iif": self.gamma_iif,
            "impact_threshold": self.impact_threshold, "hd_tiebreak": self.hd_tiebreak,
            "seed": self.seed,
        }

    def evaluate(self, run: RunData, label="run") -> ScoreReport:
        if not hasattr(self, "relevance_"):
            raise RuntimeError("call fit(relevance_table) before evaluate")
        wanted = set(self.measures_)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            data = Aligned(run, self.relevance_)
        k = self.k
        scores, diag, skipped = {}, {}, {}
        diag.update(n_users=data.m, n_items=data.n, n_rounds=data.W)
        diag["validation_warnings"] = list(data.report.warnings)

        def attempt(names, fn):
            if not wanted.intersection(names):
                return
            try:
                fn()
            except EvaluationError as exc:
                if not self.skip_unavailable:
                    raise
                for name in wanted.intersection(names):
                    skipped[name] = str(exc)

        def rel_block():
            res = rel_eval(None, None, k, _data=data)
            scores.update(res.as_dict())
            diag["rel_excluded_users"] = res.n_excluded

        def fair_block():
            scores.update(fair_eval(None, k=k, _data=data))
            diag["exposure_total"] = int(exposure_counts(None, k, _data=data).sum())

        def ibo_block():
            ibo, iwo, _ = _ibo_iwo(data, k, self.impact_threshold)
            scores.update(IBO=ibo, IWO=iwo)

        def hd_block():
            value, d = _hd(data, k, self.gamma_hd, self.hd_tiebreak, self.seed)
            scores["HD"] = value
            diag["hd_dropped_users"] = d["dropped_users"]

        attempt(REL_MEASURES, rel_block)
        attempt(FAIR_MEASURES, fair_block)
        attempt(("IBO", "IWO"), ibo_block)
        attempt(("IAA",), lambda: scores.__setitem__("IAA", _iaa(data, k)[0]))
        attempt(("IFD_div",), lambda: scores.__setitem__("IFD_div", _ifd_div(data)[0]))
        attempt(("IFD_mul",), lambda: scores.__setitem__("IFD_mul", _ifd_mul(data, k)[0]))
        attempt(("HD",), hd_block)
        attempt(("MME",), lambda: scores.__setitem__("MME", _mme(data, k)[0]))
        attempt(("II-F",), lambda: scores.__setitem__("II-F", _iif(data, k, self.gamma_iif)[0]))
        attempt(("AI-F",), lambda: scores.__setitem__("AI-F", _aif(data, k, self.gamma_iif)[0]))

        ordered = {m: float(scores[m]) for m in ALL_MEASURES if m in wanted and m in scores}
        bad = [m for m, v in ordered.items() if not math.isfinite(v)]
        if bad:
            raise EvaluationError(f"non-finite scores for {bad}")
        if skipped:
            diag["skipped"] = skipped
        return ScoreReport(str(label), self.config(), ordered, diag)


def evaluate(run, rel, label="run", **params) -> ScoreReport:
    """One-shot ``FairRelEvaluator(**params).fit(rel).evaluate(run)``."""
    return FairRelEvaluator(**params).fit(rel).evaluate(run, label)
