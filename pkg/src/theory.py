"""Closed-form restart mathematics.

For an underlying algorithm with failure curve p(t) restarted every T steps:

    P(T_R > k) = p(T)^floor((k-1)/T) * p(k - floor((k-1)/T) * T)
    E[T_R]     = sum_{k>=1} P(T_R > k)              (k counted from 1)
    g(T)       = 1 / ((1 - p(T)^(1/T)) * p(T))      (upper bound on E[T_R])

The first minimiser t_m of g is the optimal restart time. g is +inf
wherever p(t) is 0 or 1; +inf compares above every finite value.

The series counts k from 1, so it equals the mean of (T_R - 1) when
T_R counts the success step itself.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# Tail bound target used to pick the default series horizon.
SERIES_TOLERANCE = 1e-12

_MONOTONE_SLACK = 1e-12


class DomainError(ValueError):
    """Raised when an argument lies outside a formula's domain."""

    pass


class NoOptimumError(DomainError):
    """Raised when g is infinite everywhere."""

    pass


class DivergenceError(DomainError):
    """Raised when the expected-time series diverges (p(T) = 1)."""

    pass


@dataclass(frozen=True)
class FailureCurve:
    """Discrete failure curve p(1), ..., p(T_max), nonincreasing, in [0, 1]."""

    values: np.ndarray

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 1 or values.size == 0:
            raise DomainError("Failure curve must be a non-empty 1-D sequence")
        if np.any(values < 0.0) or np.any(values > 1.0):
            raise DomainError("Failure curve values must lie in [0, 1]")
        if np.any(np.diff(values) > _MONOTONE_SLACK):
            raise DomainError("Failure curve must be nonincreasing in t")
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return int(self.values.size)

    def at(self, t: int) -> float:
        """Return p(t) for 1-based ``t``."""
        if not 1 <= t <= len(self):
            raise DomainError(f"t={t} outside curve domain 1..{len(self)}")
        return float(self.values[t - 1])


@dataclass(frozen=True)
class SeriesEstimate:
    """Truncated value of sum_k P(T_R > k) and a bound on what was cut off."""

    value: float
    tail_bound: float
    horizon: int


def _check_period(p: FailureCurve, T: int) -> None:
    if not 1 <= T <= len(p):
        raise DomainError(f"Restart period T={T} outside 1..{len(p)}")


def restart_tail_probability(p: FailureCurve, T: int, k: int) -> float:
    """P(T_R > k) for period-``T`` restarts of an algorithm with curve ``p``.

    Raises:
        DomainError: If ``T`` or ``k`` is out of range.
    """
    _check_period(p, T)
    if k < 1:
        raise DomainError(f"k must be >= 1, got {k}")
    periods = (k - 1) // T
    residual = k - periods * T
    return p.at(T) ** periods * p.at(residual)


def g_series(values: np.ndarray) -> np.ndarray:
    """g(t) = [(1 - p(t)^(1/t)) p(t)]^-1 elementwise, +inf where p is 0 or 1."""
    denominator = g_denominator(values)
    with np.errstate(divide="ignore"):
        return np.where(denominator > 0.0, 1.0 / np.where(denominator > 0.0, denominator, 1.0), np.inf)


def g_denominator(values: np.ndarray) -> np.ndarray:
    """(1 - p(t)^(1/t)) p(t) elementwise, 0 where p is 0 or 1."""
    values = np.asarray(values, dtype=float)
    t = np.arange(1, values.size + 1, dtype=float)
    denominator = (1.0 - np.power(values, 1.0 / t)) * values
    inside = (values > 0.0) & (values < 1.0)
    return np.where(inside, denominator, 0.0)


def expected_time_bound(p: FailureCurve, T: int) -> float:
    """Return g(T), or ``math.inf`` when p(T) is 0 or 1."""
    _check_period(p, T)
    return float(g_series(p.values[:T])[T - 1])


def expected_optimization_time(
    p: FailureCurve, T: int, horizon: int | None = None
) -> SeriesEstimate:
    """Truncated sum_{k=1..horizon} P(T_R > k) with a geometric tail bound.

    The partial sum is evaluated per restart period: every full period j
    contributes p(T)^j * (p(1) + ... + p(T)).

    Args:
        p: Failure curve of the underlying algorithm.
        T: Restart period.
        horizon: Last k included. Defaults to the smallest multiple of T for
            which the tail bound drops below ``SERIES_TOLERANCE``.

    Raises:
        DivergenceError: If p(T) = 1.
        DomainError: If T or horizon is out of range.
    """
    _check_period(p, T)
    q = p.at(T)
    if q >= 1.0:
        raise DivergenceError(f"p({T}) = 1: the expected optimisation time is infinite")

    prefix = np.concatenate([[0.0], np.cumsum(p.values[:T])])
    period_sum = prefix[T]

    if horizon is None:
        if q == 0.0:
            horizon = T
        else:
            periods = math.log(SERIES_TOLERANCE * (1.0 - q) / T) / math.log(q)
            horizon = max(1, math.ceil(periods)) * T
    if horizon < 1:
        raise DomainError(f"horizon must be >= 1, got {horizon}")

    full, rest = divmod(horizon, T)
    geometric = (1.0 - q**full) / (1.0 - q)
    value = period_sum * geometric + q**full * prefix[rest]
    tail_bound = T * q ** (horizon // T) / (1.0 - q) if q > 0.0 else 0.0
    return SeriesEstimate(value=float(value), tail_bound=float(tail_bound), horizon=horizon)


def optimal_restart_time(p: FailureCurve) -> tuple[int, float]:
    """Brute-force scan for the first argmin t_m of g over 1..len(p).

    Returns:
        (t_m, g(t_m)).

    Raises:
        NoOptimumError: If g is +inf at every t.
    """
    g = g_series(p.values)
    finite = np.isfinite(g)
    if not finite.any():
        raise NoOptimumError("g is infinite on the whole curve; no restart time is optimal")
    t_m = int(np.argmin(g)) + 1
    return t_m, float(g[t_m - 1])


def synthetic_basin_curve(
    beta: float, q: float, t_max: int, warmup: int = 0
) -> FailureCurve:
    """Failure curve of the synthetic basin algorithm.

    p(t) = 1 for t <= warmup, beta + (1 - beta)(1 - q)^(t - warmup) after.

    Raises:
        DomainError: On parameters outside 0 < beta < 1, 0 < q <= 1,
            t_max >= 1, warmup >= 0.
    """
    if not 0.0 < beta < 1.0:
        raise DomainError(f"beta must lie in (0, 1), got {beta}")
    if not 0.0 < q <= 1.0:
        raise DomainError(f"q must lie in (0, 1], got {q}")
    if t_max < 1 or warmup < 0:
        raise DomainError(f"Need t_max >= 1 and warmup >= 0, got {t_max}, {warmup}")
    t = np.arange(1, t_max + 1)
    exponent = np.maximum(t - warmup, 0)
    values = beta + (1.0 - beta) * np.power(1.0 - q, exponent)
    return FailureCurve(np.where(t <= warmup, 1.0, values))
