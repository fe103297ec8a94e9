"""Heterogeneous logistic growth and the quadrature over the heterogeneity index.

Individuals are indexed by ``u`` in [0, 1]. Individual ``u`` grows along a
logistic curve with rate ``r(u)`` and asymptotic weight ``K(u)``, both affine
in ``u``. Every integral over ``u`` in the package goes through the midpoint
rule defined by :class:`QuadratureGrid` and the discrete density weights of
:class:`HeterogeneityDensity`.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._validation import check_nonnegative, check_unit_interval
from .exceptions import ParameterError

__all__ = [
    "GrowthSpec",
    "QuadratureGrid",
    "HeterogeneityDensity",
    "PRESETS",
    "logistic",
    "weight",
    "density_weights",
    "mean_weight",
    "expectation",
]


def logistic(x, r, K, t):
    """Logistic curve starting at ``x`` with rate ``r`` and capacity ``K``.

    Broadcasts over all arguments. No validation; see :func:`weight`.
    """
    return K / (1.0 + (K / x - 1.0) * np.exp(-r * t))


@dataclass(frozen=True)
class GrowthSpec:
    """Uncertain logistic growth model.

    Attributes:
        x: initial body weight (g), shared by all individuals.
        r_lo, r_hi: growth rate at u=0 and u=1 (1/day).
        K_lo, K_hi: asymptotic weight at u=0 and u=1 (g).
    """

    x: float
    r_lo: float
    r_hi: float
    K_lo: float
    K_hi: float

    def __post_init__(self):
        for name in ("x", "r_lo", "r_hi", "K_lo", "K_hi"):
            value = getattr(self, name)
            if not np.isfinite(value) or value <= 0:
                raise ParameterError(f"{name} must be positive and finite, got {value!r}")
        if self.r_hi < self.r_lo:
            raise ParameterError("r_hi must be >= r_lo")
        if self.K_hi < self.K_lo:
            raise ParameterError("K_hi must be >= K_lo")
        if self.x > self.K_lo:
            raise ParameterError(f"initial weight x={self.x} exceeds K_lo={self.K_lo}")

    @classmethod
    def from_preset(cls, year) -> "GrowthSpec":
        try:
            return PRESETS[str(year)]
        except KeyError:
            raise ParameterError(f"unknown preset {year!r}; choose from {sorted(PRESETS)}") from None

    @classmethod
    def constant_rate(cls, x, r, K_lo, K_hi) -> "GrowthSpec":
        return cls(x=x, r_lo=r, r_hi=r, K_lo=K_lo, K_hi=K_hi)

    def r(self, u):
        return self.r_lo + u * (self.r_hi - self.r_lo)

    def K(self, u):
        return self.K_lo + u * (self.K_hi - self.K_lo)

    def at_nodes(self, t, nodes):
        """Weights X_t(u_m) at the quadrature nodes, without validation."""
        return logistic(self.x, self.r(nodes), self.K(nodes), t)


# Fitted uncertain logistic models for the 2021 and 2022 seasons.
# Only K is heterogeneous.
PRESETS = {
    "2021": GrowthSpec.constant_rate(x=6.8, r=0.040, K_lo=8.0, K_hi=205.0),
    "2022": GrowthSpec.constant_rate(x=12.8, r=0.027, K_lo=53.0, K_hi=149.0),
}


@dataclass(frozen=True)
class QuadratureGrid:
    """Midpoint rule on [0, 1] with ``n_points`` equal cells."""

    n_points: int = 150

    def __post_init__(self):
        if int(self.n_points) != self.n_points or self.n_points < 1:
            raise ParameterError(f"n_points must be a positive integer, got {self.n_points!r}")

    @property
    def nodes(self) -> np.ndarray:
        return (np.arange(1, self.n_points + 1) - 0.5) / self.n_points

    @property
    def du(self) -> float:
        return 1.0 / self.n_points


@dataclass(frozen=True, eq=False)
class HeterogeneityDensity:
    """Discrete density values ``p_m`` at the nodes of ``quad``.

    ``weights`` holds ``p_m * du``; these are what every discrete integral
    multiplies by.
    """

    kind: str
    quad: QuadratureGrid
    p: np.ndarray = field(repr=False)
    a: float | None = None
    b: float | None = None

    @property
    def weights(self) -> np.ndarray:
        return self.p * self.quad.du

    @property
    def nodes(self) -> np.ndarray:
        return self.quad.nodes

    def mean_index(self) -> float:
        """Discrete mean of u under the density."""
        return float(np.sum(self.nodes * self.weights))


def density_weights(kind="uniform", quad=None, a=None, b=None) -> HeterogeneityDensity:
    """Build the discrete heterogeneity density on a quadrature grid.

    Beta densities are normalised on the grid itself, so the discrete
    integral of ``p`` is one up to rounding regardless of resolution.

    Args:
        kind: ``"uniform"`` or ``"beta"``.
        quad: quadrature grid; defaults to 150 midpoint nodes.
        a, b: beta shape parameters, both > 1.
    """
    quad = quad or QuadratureGrid()
    u = quad.nodes
    if kind == "uniform":
        return HeterogeneityDensity("uniform", quad, np.ones_like(u))
    if kind == "beta":
        if a is None or b is None:
            raise ParameterError("beta density needs both a and b")
        a, b = float(a), float(b)
        if not (a > 1 and b > 1):
            raise ParameterError(f"beta parameters must exceed 1, got a={a}, b={b}")
        # log-space keeps large shape parameters from under/overflowing
        log_p = (a - 1) * np.log(u) + (b - 1) * np.log1p(-u)
        raw = np.exp(log_p - log_p.max())
        p = raw / (raw.sum() * quad.du)
        return HeterogeneityDensity("beta", quad, p, a=a, b=b)
    raise ParameterError(f"unknown density kind {kind!r}")


def expectation(values, weights):
    """Discrete integral of ``values`` against density ``weights``.

    The smallest value is pulled out first so a constant integrand is
    reproduced exactly. ``values`` may carry leading batch axes.
    """
    values = np.asarray(values, dtype=float)
    base = values.min(axis=-1)
    return base + (values - base[..., None]) @ weights


def weight(spec: GrowthSpec, t, u):
    """Body weight X_t(u) in grams.

    Args:
        spec: growth model.
        t: time in days, >= 0.
        u: heterogeneity index in [0, 1].

    Raises:
        InputError: if ``t`` is negative or ``u`` falls outside [0, 1].
    """
    t = check_nonnegative(t, "t")
    u = check_unit_interval(u, "u")
    out = logistic(spec.x, spec.r(u), spec.K(u), t)
    return float(out) if np.ndim(out) == 0 else out


def mean_weight(spec: GrowthSpec, density: HeterogeneityDensity, t):
    """Population-averaged body weight at time ``t`` (grams)."""
    t = check_nonnegative(t, "t")
    nodes = density.nodes
    X = spec.at_nodes(np.asarray(t)[..., None], nodes)
    out = expectation(X, density.weights)
    return float(out) if np.ndim(out) == 0 else out
