"""Explicit monotone finite-difference sweep for the robust harvesting value function.

The value function ``Phi(t, n)`` lives on a uniform grid of ``I + 1`` time
levels and ``J + 1`` population nodes. It is pinned to zero along ``n = 0``,
to the terminal utility at ``t = t1``, and swept backward in time with an
upwind difference in ``n``. No data outside the grid is ever needed: the
upwind stencil only looks toward ``n = 0``.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .exceptions import CFLViolation, CFLWarning, InputError, NumericalFailure, ParameterError
from .growth import GrowthSpec, HeterogeneityDensity, expectation
from .robust import ObjectiveSpec, tilt_statistics

__all__ = ["SolveGrid", "ValueField", "cfl_max_dt", "solve", "interpolate"]

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SolveGrid:
    """Uniform time-population grid.

    Attributes:
        I: number of time steps.
        J: number of population steps.
        M: population cap (units of 1e4 individuals).
        t0, t1: time window in absolute days.
    """

    I: int
    J: int
    M: float = 10.0
    t0: float = 61.0
    t1: float = 181.0

    def __post_init__(self):
        if int(self.I) != self.I or self.I < 1:
            raise ParameterError(f"I must be a positive integer, got {self.I!r}")
        if int(self.J) != self.J or self.J < 1:
            raise ParameterError(f"J must be a positive integer, got {self.J!r}")
        if not (self.M > 0 and math.isfinite(self.M)):
            raise ParameterError(f"M must be positive, got {self.M!r}")
        if not self.t1 > self.t0:
            raise ParameterError("t1 must exceed t0")

    @property
    def dt(self) -> float:
        return (self.t1 - self.t0) / self.I

    @property
    def dn(self) -> float:
        return self.M / self.J

    @property
    def times(self) -> np.ndarray:
        return self.t0 + np.arange(self.I + 1) * self.dt

    @property
    def populations(self) -> np.ndarray:
        return np.arange(self.J + 1) * self.dn

    @classmethod
    def from_cfl(cls, objective: ObjectiveSpec, growth: GrowthSpec, J, M=10.0,
                 safety=0.9) -> "SolveGrid":
        """Smallest ``I`` whose step is at most ``safety`` times the CFL bound."""
        bound = cfl_max_dt(objective, growth, dn=M / J, M=M)
        I = max(1, math.ceil(objective.horizon / (safety * bound)))
        return cls(I=I, J=J, M=M, t0=objective.t0, t1=objective.t1)


def cfl_max_dt(objective: ObjectiveSpec, growth: GrowthSpec, *, dn, M) -> float:
    """Sufficient time step for nonnegativity and monotonicity of the sweep.

    ``dn / (R(M) M + alpha**2 K_hi / (4 gamma**2))``; infinite when both
    terms vanish.
    """
    rate = objective.mortality(M) * M + objective.alpha**2 * growth.K_hi / (4 * objective.gamma**2)
    return math.inf if rate == 0 else dn / rate


@dataclass(eq=False)
class ValueField:
    """Solved value function.

    ``values[k]`` holds time level ``levels[k]`` of the solver grid; all
    levels are kept unless the solve was asked to thin them.
    """

    values: np.ndarray = field(repr=False)
    levels: np.ndarray = field(repr=False)
    grid: SolveGrid
    objective: ObjectiveSpec
    growth: GrowthSpec
    density: HeterogeneityDensity = field(repr=False)
    diagnostics: list = field(default_factory=list)

    @property
    def times(self) -> np.ndarray:
        return self.grid.t0 + self.levels * self.grid.dt

    @property
    def populations(self) -> np.ndarray:
        return self.grid.populations

    def nearest_row(self, t) -> int:
        """Stored row closest to absolute time ``t``."""
        return self.row_near_level((t - self.grid.t0) / self.grid.dt)

    def row_near_level(self, i) -> int:
        """Stored row whose level is closest to (possibly fractional) level ``i``."""
        levels = self.levels
        k = int(np.searchsorted(levels, i))
        if k == 0:
            return 0
        if k == len(levels):
            return k - 1
        return k if levels[k] - i < i - levels[k - 1] else k - 1

    def row_of_level(self, i) -> int:
        k = int(np.searchsorted(self.levels, i))
        if k >= len(self.levels) or self.levels[k] != i:
            raise InputError(f"time level {i} was not stored")
        return k

    def interpolate(self, t, n) -> float:
        return interpolate(self, t, n)


def _hamiltonian_level(objective, X, weights, mean_X, z):
    # Vectorised exp and BLAS reductions may round differently by array
    # position; evaluating once per distinct z keeps equal slopes equal.
    z_unique, inverse = np.unique(z, return_inverse=True)
    if objective.robust:
        H, _ = tilt_statistics(X, weights, objective.scale(z_unique), objective.mu,
                               need_mean=False)
    else:
        H = objective.scale(z_unique) * mean_X
    return H[inverse]


def solve(objective: ObjectiveSpec, growth: GrowthSpec, density: HeterogeneityDensity,
          grid: SolveGrid, *, override_cfl=False, store_every=1, clamp=True) -> ValueField:
    """Sweep the value function backward from the terminal time.

    Args:
        objective, growth, density: model definition.
        grid: discretisation; its window must match ``objective``.
        override_cfl: proceed (with a :class:`CFLWarning`) when ``grid.dt``
            exceeds :func:`cfl_max_dt`.
        store_every: keep every k-th time level (level 0 and the terminal
            level are always kept when ``I`` is a multiple of ``k``).
        clamp: use the Hamiltonian truncated at ``z = 0``. With ``False`` the
            raw Hamiltonian is used and negative differences are an error.

    Raises:
        CFLViolation: time step too large and no override.
        NumericalFailure: a non-finite value appeared.
    """
    if not (math.isclose(grid.t0, objective.t0) and math.isclose(grid.t1, objective.t1)):
        raise ParameterError("grid window does not match the objective's harvesting window")
    if store_every < 1 or int(store_every) != store_every:
        raise ParameterError("store_every must be a positive integer")
    objective.check_harvest_cap(growth)

    diagnostics = []
    dt, dn, I, J = grid.dt, grid.dn, grid.I, grid.J
    bound = cfl_max_dt(objective, growth, dn=dn, M=grid.M)
    if dt > bound:
        if not override_cfl:
            raise CFLViolation(dt, bound)
        msg = f"CFL bound exceeded: dt={dt!r} > {bound!r}"
        warnings.warn(msg, CFLWarning, stacklevel=2)
        diagnostics.append(msg)

    n = grid.populations
    drift = objective.mortality(n[1:]) * n[1:] * dt / dn
    weights = density.weights
    nodes = density.nodes

    level = np.asarray(objective.terminal(n), dtype=float).copy()
    stored_levels = [I]
    stored = [level.copy()]
    for i in range(I - 1, -1, -1):
        z = (level[1:] - level[:-1]) / dn
        if not clamp and np.any(z < 0):
            j = int(np.argmax(z < 0)) + 1
            raise NumericalFailure(i, j, float(z[j - 1]))
        X = growth.at_nodes(grid.t0 + i * dt, nodes)
        mean_X = expectation(X, weights) if not objective.robust else None
        H = _hamiltonian_level(objective, X, weights, mean_X, z)
        new = np.empty_like(level)
        new[0] = 0.0
        new[1:] = level[1:] - drift * (level[1:] - level[:-1]) + H * dt
        if not np.all(np.isfinite(new)):
            j = int(np.argmin(np.isfinite(new)))
            raise NumericalFailure(i, j, float(new[j]))
        level = new
        if i % store_every == 0:
            stored_levels.append(i)
            stored.append(level.copy())

    values = np.array(stored[::-1])
    levels = np.array(stored_levels[::-1])
    logger.debug("solved %d levels x %d nodes", I + 1, J + 1)
    return ValueField(values, levels, grid, objective, growth, density, diagnostics)


def interpolate(field: ValueField, t, n) -> float:
    """Bilinear interpolation of the stored field at ``(t, n)``.

    Reproduces nodal values exactly. No extrapolation.
    """
    grid = field.grid
    times = field.times
    if not (grid.t0 <= t <= grid.t1) or not (0 <= n <= grid.M):
        raise InputError(f"query ({t}, {n}) outside [{grid.t0}, {grid.t1}] x [0, {grid.M}]")
    k = int(np.clip(np.searchsorted(times, t, side="right") - 1, 0, len(times) - 2)) \
        if len(times) > 1 else 0
    j = int(np.clip(math.floor(n / grid.dn), 0, grid.J - 1))
    V = field.values
    if len(times) == 1:
        wt = 0.0
        k1 = k
    else:
        wt = (t - times[k]) / (times[k + 1] - times[k])
        k1 = k + 1
    wn = (n - j * grid.dn) / grid.dn
    return float(
        (1 - wt) * (1 - wn) * V[k, j]
        + wt * (1 - wn) * V[k1, j]
        + (1 - wt) * wn * V[k, j + 1]
        + wt * wn * V[k1, j + 1]
    )
