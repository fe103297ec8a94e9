"""Entropic worst case of the heterogeneity density and the resulting Hamiltonians.

For a fixed marginal value ``z`` of population, the adversary reweights the
heterogeneity density by an exponential tilt ``exp(-a X / mu)`` with
``a = alpha**2 / (4 (gamma + z))``. The Hamiltonian is the corresponding
log-partition value ``-mu log E[exp(-a X / mu)]``. Everything here is
evaluated with the smallest weight pulled out of the exponent so that small
``mu`` never underflows.

``mu = math.inf`` is a regular configuration value: the tilt disappears and
the Hamiltonian reduces to ``a E[X]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from ._validation import as_float_array, check_nonnegative
from .exceptions import InputError, ParameterError
from .growth import GrowthSpec, HeterogeneityDensity, expectation

__all__ = [
    "PiecewiseLinear",
    "ObjectiveSpec",
    "DistortionField",
    "kl_divergence",
    "worst_case_distortion",
    "hamiltonian",
    "hamiltonian_modified",
    "hamiltonian_limit",
    "hamiltonian_dz",
    "distorted_mean_weight",
    "tilt_statistics",
]


@dataclass(frozen=True, eq=False)
class PiecewiseLinear:
    """Piecewise-linear function of population, constant outside its knots."""

    knots: tuple
    values: tuple

    def __post_init__(self):
        knots = np.asarray(self.knots, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if knots.ndim != 1 or knots.shape != values.shape or knots.size == 0:
            raise ParameterError("knots and values must be equal-length, non-empty sequences")
        if np.any(np.diff(knots) <= 0):
            raise ParameterError("knots must be strictly increasing")
        if not (np.all(np.isfinite(knots)) and np.all(np.isfinite(values))):
            raise ParameterError("knots and values must be finite")
        object.__setattr__(self, "knots", tuple(knots.tolist()))
        object.__setattr__(self, "values", tuple(values.tolist()))

    @classmethod
    def constant(cls, value):
        return cls((0.0,), (float(value),))

    @classmethod
    def zero(cls):
        return cls.constant(0.0)

    @classmethod
    def capped_linear(cls, slope, cap):
        """``slope * min(n, cap)``."""
        return cls((0.0, float(cap)), (0.0, float(slope) * float(cap)))

    def __call__(self, n):
        out = np.interp(n, self.knots, self.values)
        return float(out) if np.ndim(out) == 0 else out

    @property
    def is_nondecreasing(self) -> bool:
        return bool(np.all(np.diff(self.values) >= 0))

    def describe(self) -> str:
        pairs = ", ".join(f"({k:g}, {v:g})" for k, v in zip(self.knots, self.values))
        return f"piecewise-linear[{pairs}]"


@dataclass(frozen=True)
class ObjectiveSpec:
    """Harvest economics and robustness weights.

    Attributes:
        alpha: weight of the square-root harvesting utility (1/day).
        gamma: linear harvesting cost weight (1/day).
        mu: uncertainty-aversion weight (1/day); ``math.inf`` disables the
            adversary.
        c_bar: cap on the harvest rate. ``None`` selects the smallest cap
            compatible with the model, ``alpha**2 K_hi / (4 gamma**2)``.
        t0, t1: harvesting window in absolute days.
        terminal: terminal utility h(n).
        mortality: mortality rate R(n) (1/day).
    """

    alpha: float = 0.05
    gamma: float = 0.1
    mu: float = 0.01
    c_bar: float | None = None
    t0: float = 61.0
    t1: float = 181.0
    terminal: PiecewiseLinear = field(default_factory=PiecewiseLinear.zero)
    mortality: PiecewiseLinear = field(default_factory=lambda: PiecewiseLinear.constant(0.01))

    def __post_init__(self):
        # alpha == 0 is admitted: it switches harvesting off entirely
        if not (np.isfinite(self.alpha) and self.alpha >= 0):
            raise ParameterError(f"alpha must be >= 0, got {self.alpha!r}")
        if not (np.isfinite(self.gamma) and self.gamma > 0):
            raise ParameterError(f"gamma must be > 0, got {self.gamma!r}")
        if math.isnan(self.mu) or self.mu <= 0:
            raise ParameterError(f"mu must be > 0 or inf, got {self.mu!r}")
        if not (0 <= self.t0 < self.t1 and np.isfinite(self.t1)):
            raise ParameterError(f"need 0 <= t0 < t1, got t0={self.t0}, t1={self.t1}")
        if self.c_bar is not None and not self.c_bar >= 0:
            raise ParameterError(f"c_bar must be >= 0, got {self.c_bar!r}")
        h = self.terminal
        if h(0.0) != 0.0:
            raise ParameterError("terminal utility must vanish at n = 0")
        if not h.is_nondecreasing:
            raise ParameterError("terminal utility must be nondecreasing")
        R = self.mortality
        if not R.is_nondecreasing or min(R.values) < 0:
            raise ParameterError("mortality must be nonnegative and nondecreasing")

    @property
    def horizon(self) -> float:
        return self.t1 - self.t0

    @property
    def robust(self) -> bool:
        return not math.isinf(self.mu)

    def with_mu(self, mu) -> "ObjectiveSpec":
        return replace(self, mu=float(mu))

    def min_harvest_cap(self, growth: GrowthSpec) -> float:
        return self.alpha**2 * growth.K_hi / (4 * self.gamma**2)

    def harvest_cap(self, growth: GrowthSpec) -> float:
        return self.min_harvest_cap(growth) if self.c_bar is None else self.c_bar

    def check_harvest_cap(self, growth: GrowthSpec):
        """Raise unless the harvest cap never binds the unconstrained optimum."""
        need = self.min_harvest_cap(growth)
        if self.harvest_cap(growth) < need:
            raise ParameterError(
                f"c_bar={self.c_bar} is below alpha^2 K_hi / (4 gamma^2) = {need}"
            )

    def scale(self, z):
        """``alpha**2 / (4 (gamma + z))`` for clamped ``z``."""
        return self.alpha**2 / (4.0 * (self.gamma + np.maximum(z, 0.0)))


@dataclass(frozen=True, eq=False)
class DistortionField:
    """Worst-case reweighting of the density at one ``(t, z)``."""

    samples: np.ndarray = field(repr=False)
    t: float
    z: float
    density: HeterogeneityDensity = field(repr=False)
    # log of the samples, exact even where the samples underflow to zero
    log_samples: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.log_samples is None:
            with np.errstate(divide="ignore"):
                object.__setattr__(self, "log_samples", np.log(self.samples))

    @property
    def distorted_p(self) -> np.ndarray:
        return self.samples * self.density.p

    def normalisation(self) -> float:
        return float(np.sum(self.samples * self.density.weights))


def tilt_statistics(X, weights, scale, mu, need_mean=True):
    """Log-partition and tilted mean for a batch of tilt strengths.

    Args:
        X: node weights, shape (m,).
        weights: density weights ``p_m du``, shape (m,).
        scale: ``alpha**2 / (4 (gamma + z))``, shape (k,) or scalar.
        mu: finite uncertainty aversion.
        need_mean: also return the tilted mean of ``X``.

    Returns:
        ``(H, mean)`` where ``H = -mu log sum_m w_m exp(-scale X_m / mu)``
        and ``mean`` is the tilted mean (or ``None``).
    """
    scale = np.asarray(scale, dtype=float)
    x_min = X.min()
    spread = X - x_min
    s = -(scale / mu)[..., None] * spread
    e = np.exp(s)
    S = e @ weights
    H = scale * x_min - mu * np.log(S)
    # No spread in the tilt: the log term is zero analytically, keep it exact.
    flat = (scale == 0) | (spread.max() == 0)
    H = np.where(flat, scale * x_min, H)
    mean = None
    if need_mean:
        mean = x_min + (e @ (spread * weights)) / S
    return H, mean


def _nodes(growth: GrowthSpec, density: HeterogeneityDensity, t):
    return growth.at_nodes(t, density.nodes)


def kl_divergence(phi, density: HeterogeneityDensity, tol=1e-9) -> float:
    """Relative entropy ``sum (phi ln phi - phi + 1) p du`` of a reweighting.

    Raises:
        InputError: on negative samples or when ``phi`` does not integrate to
            one against the density within ``tol``.
    """
    phi = as_float_array(phi, "phi")
    if phi.shape != density.nodes.shape:
        raise InputError("phi must have one sample per quadrature node")
    if np.any(phi < 0):
        raise InputError("phi must be nonnegative")
    w = density.weights
    total = float(phi @ w)
    if abs(total - 1.0) > tol:
        raise InputError(f"phi integrates to {total!r}, not 1")
    with np.errstate(divide="ignore", invalid="ignore"):
        plogp = np.where(phi > 0, phi * np.log(phi), 0.0)
    return max(float((plogp - phi + 1.0) @ w), 0.0)


def worst_case_distortion(objective: ObjectiveSpec, growth: GrowthSpec,
                          density: HeterogeneityDensity, t, z) -> DistortionField:
    """Minimising reweighting of the density for marginal value ``z >= 0``."""
    z = float(check_nonnegative(z, "z"))
    if not objective.robust:
        return DistortionField(np.ones_like(density.nodes), float(t), z, density)
    X = _nodes(growth, density, t)
    spread = X - X.min()
    if not spread.any():
        return DistortionField(np.ones_like(density.nodes), float(t), z, density)
    exponent = -(objective.scale(z) / objective.mu) * spread
    e = np.exp(exponent)
    total = e @ density.weights
    return DistortionField(e / total, float(t), z, density, exponent - np.log(total))


def hamiltonian(objective: ObjectiveSpec, growth: GrowthSpec,
                density: HeterogeneityDensity, t, z):
    """Entropic Hamiltonian ``H(t, z)`` for ``z >= 0``.

    Accepts a scalar or an array of ``z``.
    """
    check_nonnegative(z, "z")
    return hamiltonian_modified(objective, growth, density, t, z)


def hamiltonian_modified(objective: ObjectiveSpec, growth: GrowthSpec,
                         density: HeterogeneityDensity, t, z):
    """Hamiltonian with its argument truncated at zero; defined for all real z."""
    z = as_float_array(z, "z")
    if not objective.robust:
        return hamiltonian_limit(objective, growth, density, t, z)
    X = _nodes(growth, density, t)
    H, _ = tilt_statistics(X, density.weights, objective.scale(z), objective.mu, need_mean=False)
    return float(H) if np.ndim(H) == 0 else H


def hamiltonian_limit(objective: ObjectiveSpec, growth: GrowthSpec,
                      density: HeterogeneityDensity, t, z):
    """No-uncertainty Hamiltonian ``alpha**2 E[X_t] / (4 (gamma + max(z, 0)))``."""
    z = as_float_array(z, "z")
    X = _nodes(growth, density, t)
    out = objective.scale(z) * expectation(X, density.weights)
    return float(out) if np.ndim(out) == 0 else out


def hamiltonian_dz(objective: ObjectiveSpec, growth: GrowthSpec,
                   density: HeterogeneityDensity, t, z):
    """Exact derivative of the Hamiltonian in ``z``: minus the tilted mean
    weight times ``alpha**2 / (4 (gamma + z)**2)``."""
    z = check_nonnegative(z, "z")
    X = _nodes(growth, density, t)
    scale = objective.scale(z)
    if objective.robust:
        _, mean = tilt_statistics(X, density.weights, scale, objective.mu)
    else:
        mean = expectation(X, density.weights)
    out = -scale / (objective.gamma + z) * mean
    return float(out) if np.ndim(out) == 0 else out


def distorted_mean_weight(objective: ObjectiveSpec, growth: GrowthSpec,
                          density: HeterogeneityDensity, t, z):
    """Average body weight under the worst-case reweighting (grams)."""
    z = check_nonnegative(z, "z")
    X = _nodes(growth, density, t)
    if not objective.robust:
        out = expectation(X, density.weights) + np.zeros_like(z)
    else:
        _, out = tilt_statistics(X, density.weights, objective.scale(z), objective.mu)
    return float(out) if np.ndim(out) == 0 else out
