"""Exceptions and input validation helpers shared across the package."""

from __future__ import annotations

import numbers

import numpy as np


class EvaluationError(ValueError):
    """Base class for errors raised while computing a measure."""


class DepthError(EvaluationError):
    """A ranked list is shorter than the cutoff a measure needs."""

    def __init__(self, user, depth, required, round_=None):
        self.user = user
        self.depth = depth
        self.required = required
        where = f"user {user!r}" if round_ is None else f"user {user!r} (round {round_})"
        super().__init__(f"{where} has run depth {depth}, measure needs >= {required}")


class MissingRankError(EvaluationError):
    """A relevant item has no rank in a list that should be a full ranking."""

    def __init__(self, user, item):
        self.user = user
        self.item = item
        super().__init__(
            f"relevant item {item!r} has no rank for user {user!r}; "
            "this measure needs full rankings"
        )


class DegenerateInputError(EvaluationError):
    """The measure is undefined on this input (e.g. k=1, n=1, empty item set)."""


class StructuralError(ValueError):
    """A run file or run array violates list structure (duplicates, rank gaps)."""

    def __init__(self, message, offenders=()):
        self.offenders = list(offenders)
        if self.offenders:
            shown = ", ".join(repr(o) for o in self.offenders[:10])
            more = "" if len(self.offenders) <= 10 else f" (+{len(self.offenders) - 10} more)"
            message = f"{message}: {shown}{more}"
        super().__init__(message)


class ParseError(ValueError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class SchemaError(ValueError):
    pass


class ConfigurationError(ValueError):
    pass


def check_cutoff(k, name="k", minimum=1):
    if not isinstance(k, numbers.Integral) or isinstance(k, bool):
        raise ConfigurationError(f"{name} must be an integer, got {k!r}")
    if k < minimum:
        raise ConfigurationError(f"{name} must be >= {minimum}, got {k}")
    return int(k)


def check_unit_interval(value, name, closed=False):
    value = float(value)
    ok = 0.0 <= value <= 1.0 if closed else 0.0 < value < 1.0
    if not ok:
        bounds = "[0, 1]" if closed else "(0, 1)"
        raise ConfigurationError(f"{name} must lie in {bounds}, got {value}")
    return value


def check_nonnegative_counts(x):
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ValueError("exposure counts must be a 1-d vector")
    if np.any(x < 0) or not np.all(np.isfinite(x)):
        raise ValueError("exposure counts must be finite and non-negative")
    return x
