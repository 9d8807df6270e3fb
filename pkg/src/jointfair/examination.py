"""Position-based examination (exposure weight) functions."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .base import ConfigurationError, DegenerateInputError, check_unit_interval

KINDS = ("linear", "normalized_linear", "dcg", "rbp", "inverse")


@dataclass(frozen=True)
class ExamSpec:
    """Which examination function to use; ``gamma`` is the RBP patience."""

    kind: str
    gamma: float | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigurationError(f"unknown examination kind {self.kind!r}; expected one of {KINDS}")
        if self.kind == "rbp":
            if self.gamma is None:
                raise ConfigurationError("rbp needs gamma")
            check_unit_interval(self.gamma, "gamma")
        elif self.gamma is not None:
            raise ConfigurationError(f"gamma only applies to rbp, not {self.kind}")


def exam_weight(spec, z, k=None):
    """Examination weight of rank ``z`` (scalar or array, 1-based).

    Parameters
    ----------
    spec : ExamSpec or str
        A bare string is accepted for the kinds without parameters.
    z : int or array_like of int
        Rank positions, each >= 1.
    k : int, optional
        Cutoff.  Required by ``linear`` and ``normalized_linear``; when
        given, ranks beyond ``k`` get weight 0 for every kind.

    Returns
    -------
    float or ndarray
    """
    if isinstance(spec, str):
        spec = ExamSpec(spec)
    z_arr = np.asarray(z, dtype=float)
    if np.any(z_arr < 1):
        raise ValueError("rank positions start at 1")
    kind = spec.kind
    if kind in ("linear", "normalized_linear") and k is None:
        raise ConfigurationError(f"{kind} needs a cutoff k")
    if kind == "linear":
        w = k + 1 - z_arr
    elif kind == "normalized_linear":
        if k < 2:
            raise DegenerateInputError("normalized linear weight needs k >= 2 (denominator k - 1)")
        w = (k - z_arr) / (k - 1)
    elif kind == "dcg":
        w = 1.0 / np.log2(z_arr + 1.0)
    elif kind == "rbp":
        w = spec.gamma ** (z_arr - 1.0)
    else:
        w = 1.0 / z_arr
    if k is not None:
        w = np.where(z_arr <= k, w, 0.0)
    return float(w) if np.ndim(w) == 0 else w


def position_weights(spec, k):
    """Weights for ranks ``1..k`` as an array of length ``k``."""
    return exam_weight(spec, np.arange(1, k + 1), k)
