"""scikit-learn compatible wrappers.

:class:`UncertainLogisticRegressor` fits the uncertain logistic growth model
to ``(t, weight)`` samples. :class:`RobustHarvestSolver` "fits" the robust
value function for a model specification and then predicts values, harvest
rates and worst-case mean weights at ``(t, n)`` query points.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from ._validation import check_time_population
from .calibrate import Candidate, FitRanges, ObservationSet, grid_search_fit, theoretical_moments
from .growth import GrowthSpec, QuadratureGrid, density_weights
from .policy import gradient_n, integrate_backward, integrate_forward, optimal_harvest
from .robust import ObjectiveSpec, distorted_mean_weight
from .solver import SolveGrid, interpolate, solve

__all__ = ["UncertainLogisticRegressor", "RobustHarvestSolver"]


class UncertainLogisticRegressor(RegressorMixin, BaseEstimator):
    """Mean body weight of a population with uniformly spread asymptotic weight.

    Parameters
    ----------
    ranges : FitRanges or None
        Search grid; ``None`` uses the default grid.
    n_quad : int
        Midpoint nodes for the integral over the heterogeneity index.
    n_jobs : int or None
        Workers for the scan over growth rates.

    Attributes
    ----------
    candidate_ : Candidate
    loss_ : float
    n_ties_ : int
    growth_ : GrowthSpec
    """

    def __init__(self, ranges=None, n_quad=150, n_jobs=None):
        self.ranges = ranges
        self.n_quad = n_quad
        self.n_jobs = n_jobs

    def fit(self, X, y):
        """Fit on times ``X`` (days, one column) and weights ``y`` (grams)."""
        X, y = check_X_y(X, y, ensure_2d=False, dtype=float)
        t = X.ravel() if X.ndim > 1 else X
        obs = ObservationSet(t, y)
        result = grid_search_fit(obs, self.ranges or FitRanges(),
                                 QuadratureGrid(self.n_quad), n_jobs=self.n_jobs)
        self.candidate_ = result.candidate
        self.loss_ = result.loss
        self.n_ties_ = result.ties
        self.n_evaluated_ = result.n_evaluated
        c = result.candidate
        self.growth_ = GrowthSpec.constant_rate(c.x, c.r, c.K_lo, c.K_hi)
        return self

    def predict(self, X, return_std=False):
        check_is_fitted(self, "candidate_")
        X = check_array(X, ensure_2d=False, dtype=float)
        t = X.ravel()
        mean, std = theoretical_moments(self.candidate_, t, QuadratureGrid(self.n_quad))
        mean, std = np.atleast_1d(mean), np.atleast_1d(std)
        return (mean, std) if return_std else mean


class RobustHarvestSolver(BaseEstimator):
    """Robust optimal harvesting policy for a heterogeneous population.

    ``fit`` ignores its arguments and solves the value function on the grid
    described by the parameters. Query methods take an array of shape
    ``(n_samples, 2)`` holding ``(t, n)`` rows.

    Parameters
    ----------
    growth : GrowthSpec or str
        Growth model or a preset year ("2021", "2022").
    objective : ObjectiveSpec or None
    density : str
        "uniform" or "beta".
    density_a, density_b : float or None
        Beta shape parameters.
    n_quad : int
    n_pop_steps : int
        J, number of population cells.
    pop_max : float
        M, population cap in units of 1e4 individuals.
    n_time_steps : int or None
        I; ``None`` picks the smallest I within ``cfl_safety`` of the CFL bound.
    cfl_safety : float
    override_cfl : bool
    """

    def __init__(self, growth="2021", objective=None, density="uniform", density_a=None,
                 density_b=None, n_quad=150, n_pop_steps=200, pop_max=10.0,
                 n_time_steps=None, cfl_safety=0.9, override_cfl=False):
        self.growth = growth
        self.objective = objective
        self.density = density
        self.density_a = density_a
        self.density_b = density_b
        self.n_quad = n_quad
        self.n_pop_steps = n_pop_steps
        self.pop_max = pop_max
        self.n_time_steps = n_time_steps
        self.cfl_safety = cfl_safety
        self.override_cfl = override_cfl

    def fit(self, X=None, y=None):
        growth = self.growth
        if not isinstance(growth, GrowthSpec):
            growth = GrowthSpec.from_preset(growth)
        objective = self.objective or ObjectiveSpec()
        density = density_weights(self.density, QuadratureGrid(self.n_quad),
                                  a=self.density_a, b=self.density_b)
        if self.n_time_steps is None:
            grid = SolveGrid.from_cfl(objective, growth, self.n_pop_steps, self.pop_max,
                                      safety=self.cfl_safety)
        else:
            grid = SolveGrid(self.n_time_steps, self.n_pop_steps, self.pop_max,
                             objective.t0, objective.t1)
        self.field_ = solve(objective, growth, density, grid, override_cfl=self.override_cfl)
        self.growth_, self.objective_, self.density_, self.grid_ = growth, objective, density, grid
        return self

    def _queries(self, X):
        check_is_fitted(self, "field_")
        return check_time_population(X)

    def predict(self, X):
        """Interpolated value function at each ``(t, n)``."""
        X = self._queries(X)
        return np.array([interpolate(self.field_, t, n) for t, n in X[:, :2]])

    def _gradients(self, X):
        f = self.field_
        return np.array([gradient_n(f, f.nearest_row(t), n if n > 0 else f.grid.dn)
                         for t, n in X[:, :2]])

    def harvest_rate(self, X):
        """Optimal harvest rate at each ``(t, n)``; zero where ``n == 0``."""
        X = self._queries(X)
        z = self._gradients(X)
        c = np.array([optimal_harvest(self.objective_, self.growth_, self.density_, t, zi)
                      for t, zi in zip(X[:, 0], z)])
        return np.where(X[:, 1] > 0, c, 0.0)

    def distorted_mean_weight(self, X):
        """Worst-case mean body weight at each ``(t, n)``."""
        X = self._queries(X)
        z = self._gradients(X)
        return np.array([distorted_mean_weight(self.objective_, self.growth_, self.density_, t, zi)
                         for t, zi in zip(X[:, 0], z)])

    def paths(self, terminal_values=(), initial_values=()):
        """Backward paths from terminal values and forward paths from initial values."""
        check_is_fitted(self, "field_")
        back = [integrate_backward(self.field_, v) for v in terminal_values]
        fwd = [integrate_forward(self.field_, v) for v in initial_values]
        return back, fwd


def candidate_from_growth(growth: GrowthSpec) -> Candidate:
    return Candidate(growth.x, growth.r_lo, growth.K_lo, growth.K_hi)
