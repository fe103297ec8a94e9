"""Least-squares calibration of the uncertain logistic model by exhaustive grid search.

Only the asymptotic weight is heterogeneous during fitting, uniformly
distributed on ``[K_lo, K_hi]``. A candidate is the quadruple
``(x, r, K_lo, K_hi)`` and its loss is the mean squared residual between the
observed weights and the theoretical mean weight at the observation times.
"""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from joblib import Parallel, delayed
from numba import njit

from ._validation import check_1d
from .exceptions import ConfigurationError, InputError
from .growth import QuadratureGrid, logistic

__all__ = [
    "Candidate",
    "ObservationSet",
    "FitRanges",
    "FitResult",
    "theoretical_moments",
    "loss",
    "grid_search_fit",
]


class Candidate(NamedTuple):
    x: float
    r: float
    K_lo: float
    K_hi: float


@dataclass(frozen=True, eq=False)
class ObservationSet:
    """Body weights ``w`` (g) sampled at days ``t`` since May 1."""

    t: np.ndarray
    w: np.ndarray

    def __post_init__(self):
        t = check_1d(self.t, "t")
        w = check_1d(self.w, "w")
        if t.shape != w.shape or t.size == 0:
            raise InputError("t and w must be non-empty and of equal length")
        if np.any(t < 0):
            raise InputError("observation times must be >= 0")
        if np.any(w <= 0):
            raise InputError("observed weights must be > 0")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "w", w)

    def __len__(self):
        return len(self.t)

    @classmethod
    def from_csv(cls, path) -> "ObservationSet":
        """Read a CSV with header columns ``t`` and ``w``."""
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None or not {"t", "w"} <= set(reader.fieldnames):
                raise InputError(f"{path}: expected header columns 't' and 'w'")
            rows = [(float(r["t"]), float(r["w"])) for r in reader]
        if not rows:
            raise InputError(f"{path}: no observations")
        t, w = zip(*rows)
        return cls(np.array(t), np.array(w))


# Relative slack when screening losses; far above the rounding of the
# rearranged curve, far below any real loss gap on the grid.
_SCREEN_TOL = 1e-9


def _steps(lo, hi, step):
    if not step > 0:
        raise ConfigurationError(f"step must be positive, got {step!r}")
    if hi < lo:
        raise ConfigurationError(f"empty range [{lo}, {hi}]")
    count = int(np.floor((hi - lo) / step + 1e-9)) + 1
    # rounding keeps grid values such as 0.030 exact decimals
    return np.round(lo + step * np.arange(count), 10)


@dataclass(frozen=True)
class FitRanges:
    """Inclusive search ranges ``(lo, hi, step)`` for each parameter."""

    r: tuple = (0.020, 0.050, 0.001)
    x: tuple = (5.0, 15.0, 1.0)
    K_lo: tuple = (1.0, 301.0, 1.0)
    K_hi: tuple = (1.0, 301.0, 1.0)
    min_gap: float = 1.0

    @classmethod
    def around(cls, truth: Candidate, steps=5, r_step=0.001, x_step=1.0, K_step=1.0,
               min_gap=1.0) -> "FitRanges":
        """Ranges of ``+-steps`` increments centred on ``truth``."""
        def rng(v, s):
            return (v - steps * s, v + steps * s, s)

        return cls(r=rng(truth.r, r_step), x=rng(truth.x, x_step),
                   K_lo=rng(truth.K_lo, K_step), K_hi=rng(truth.K_hi, K_step),
                   min_gap=min_gap)

    def values(self):
        return tuple(_steps(*getattr(self, name)) for name in ("r", "x", "K_lo", "K_hi"))

    def k_pairs(self):
        """All (K_lo, K_hi) with ``K_hi >= K_lo + min_gap``, in scan order."""
        _, _, k_lo, k_hi = self.values()
        lo, hi = np.meshgrid(k_lo, k_hi, indexing="ij")
        keep = hi >= lo + self.min_gap - 1e-12
        return lo[keep], hi[keep]


@dataclass
class FitResult:
    candidate: Candidate
    loss: float
    ties: int
    n_evaluated: int
    runtime: float = field(default=0.0, compare=False)


def theoretical_moments(candidate: Candidate, t, quad=None):
    """Mean and standard deviation of body weight under uniform K heterogeneity.

    Returns:
        ``(mean, std)``, scalars or arrays matching ``t``.
    """
    quad = quad or QuadratureGrid()
    x, r, K_lo, K_hi = candidate
    u = quad.nodes
    K = K_lo + u * (K_hi - K_lo)
    t_arr = np.asarray(t, dtype=float)
    X = logistic(x, r, K, t_arr[..., None])
    # shifting by the minimum keeps constant curves exact; two passes avoid
    # cancellation in the variance
    base = X.min(axis=-1, keepdims=True)
    mean = (base + (X - base).mean(axis=-1, keepdims=True))
    std = np.sqrt(((X - mean) ** 2).mean(axis=-1))
    mean = mean[..., 0]
    if np.ndim(mean) == 0:
        return float(mean), float(std)
    return mean, std


def loss(candidate: Candidate, obs: ObservationSet, quad=None) -> float:
    """Mean squared residual between observed weights and the mean curve."""
    mean, _ = theoretical_moments(candidate, obs.t, quad)
    return float(np.mean((obs.w - mean) ** 2))


@njit(cache=True)
def _screen_means(x, q, k_lo, k_hi, u):
    """Quadrature mean curve for every K pair (rows) at every ``q = exp(-r t)``."""
    n_pairs, n_times, n_nodes = k_lo.shape[0], q.shape[0], u.shape[0]
    out = np.empty((n_pairs, n_times))
    for p in range(n_pairs):
        span = k_hi[p] - k_lo[p]
        for k in range(n_times):
            qt = q[k]
            a = x * (1.0 - qt)
            total = 0.0
            for m in range(n_nodes):
                K = k_lo[p] + u[m] * span
                total += x * K / (a + qt * K)
            out[p, k] = total / n_nodes
    return out


def _scan_rate(r, xs, k_lo, k_hi, u, t_unique, inverse, w):
    """Best candidate for one growth rate, scanning x then K pairs in order.

    Losses are first screened with a compiled loop over the rearranged curve
    ``x K / (x (1 - q) + q K)``, ``q = exp(-r t)``. Everything within rounding of the screened minimum is then
    rescored with :func:`loss` so the reported value and the tie-break do not
    depend on the shortcut.

    Returns (loss, x, K_lo, K_hi, ties, evaluated).
    """
    best = (np.inf, None, None, None)
    ties = 0
    evaluated = 0
    q = np.exp(-r * t_unique)
    obs = ObservationSet(t_unique[inverse], w)
    quad = QuadratureGrid(len(u))
    for x in xs:
        feasible = k_lo >= x
        if not feasible.any():
            continue
        means = _screen_means(float(x), q, k_lo[feasible], k_hi[feasible], u)
        screened = np.mean((w[None, :] - means[:, inverse]) ** 2, axis=1)
        evaluated += screened.size
        floor = screened.min()
        near = np.flatnonzero(screened <= floor + _SCREEN_TOL * (1.0 + floor))
        lo, hi = k_lo[feasible][near], k_hi[feasible][near]
        exact = np.array([loss(Candidate(x, r, a, b), obs, quad) for a, b in zip(lo, hi)])
        k = int(np.argmin(exact))
        value = float(exact[k])
        if value < best[0]:
            best = (value, float(x), float(lo[k]), float(hi[k]))
            ties = int(np.count_nonzero(exact == value))
        elif value == best[0]:
            ties += int(np.count_nonzero(exact == value))
    return best + (ties, evaluated)


def grid_search_fit(obs: ObservationSet, ranges: FitRanges | None = None, quad=None,
                    n_jobs=None) -> FitResult:
    """Exhaustively minimise :func:`loss` over the search grid.

    Candidates with ``x > K_lo`` are skipped. Ties are resolved by the scan
    order ``(r, x, K_lo, K_hi)`` ascending, independently of ``n_jobs``.

    Raises:
        ConfigurationError: if no candidate is feasible.
    """
    ranges = ranges or FitRanges()
    quad = quad or QuadratureGrid()
    start = time.perf_counter()
    rs, xs, _, _ = ranges.values()
    k_lo, k_hi = ranges.k_pairs()
    if k_lo.size == 0:
        raise ConfigurationError("no (K_lo, K_hi) pair satisfies the gap constraint")
    t_unique, inverse = np.unique(obs.t, return_inverse=True)
    args = (xs, k_lo, k_hi, quad.nodes, t_unique, inverse, obs.w)
    if n_jobs in (None, 1):
        results = [_scan_rate(r, *args) for r in rs]
    else:
        results = Parallel(n_jobs=n_jobs)(delayed(_scan_rate)(r, *args) for r in rs)

    best, best_r, ties, evaluated = None, None, 0, 0
    for r, (value, x, lo, hi, n_ties, n_eval) in zip(rs, results):
        evaluated += n_eval
        if x is None:
            continue
        if best is None or value < best[0]:
            best, best_r, ties = (value, x, lo, hi), float(r), n_ties
        elif value == best[0]:
            ties += n_ties
    if best is None:
        raise ConfigurationError("every candidate violates x <= K_lo")
    value, x, lo, hi = best
    return FitResult(Candidate(x, best_r, lo, hi), value, ties, evaluated,
                     time.perf_counter() - start)
