"""Optimal harvest rates and controlled population paths from a solved field."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._validation import check_nonnegative
from .exceptions import InputError
from .growth import GrowthSpec, HeterogeneityDensity, expectation
from .robust import ObjectiveSpec, distorted_mean_weight, tilt_statistics
from .solver import ValueField

__all__ = [
    "Trajectory",
    "gradient_n",
    "optimal_harvest",
    "policy_field",
    "integrate_backward",
    "integrate_forward",
    "distorted_weight_path",
]


@dataclass(eq=False)
class Trajectory:
    """Controlled population path sampled on the solver clock.

    Samples are stored in increasing time regardless of the integration
    direction. ``truncated`` is set when a backward path left the grid
    (population above ``M``); the path then starts at the last in-domain
    sample.
    """

    t: np.ndarray
    n: np.ndarray
    c: np.ndarray
    z: np.ndarray
    xbar: np.ndarray
    direction: str
    truncated: bool = False

    def __len__(self):
        return len(self.t)

    def rows(self):
        return zip(self.t, self.n, self.c, self.z, self.xbar)


def _cell(field: ValueField, n) -> int:
    # rounding first keeps a node computed as j * dn in cell j
    j = math.ceil(round(n / field.grid.dn, 9))
    return min(max(j, 1), field.grid.J)


def gradient_n(field: ValueField, i, n) -> float:
    """Backward difference of the field in ``n`` on stored row ``i``, clamped at 0.

    The cell is the one with ``(j - 1) dn < n <= j dn``, matching the upwind
    stencil of the sweep.
    """
    if not n > 0:
        raise InputError(f"population must be positive, got {n!r}")
    if n > field.grid.M:
        raise InputError(f"population {n!r} above the grid cap {field.grid.M!r}")
    j = _cell(field, n)
    row = field.values[i]
    return max(0.0, (row[j] - row[j - 1]) / field.grid.dn)


def optimal_harvest(objective: ObjectiveSpec, growth: GrowthSpec,
                    density: HeterogeneityDensity, t, z):
    """Unconstrained optimal harvest rate ``alpha**2 Xbar_phi / (4 (gamma + z)**2)``.

    ``Xbar_phi`` is the worst-case distorted mean weight at ``(t, z)``. Under a
    valid harvest cap this never exceeds ``c_bar``.
    """
    z = check_nonnegative(z, "z")
    xbar = distorted_mean_weight(objective, growth, density, t, z)
    out = objective.scale(z) / (objective.gamma + z) * xbar
    return float(out) if np.ndim(out) == 0 else out


def policy_field(field: ValueField):
    """Gradients and harvest rates on every stored node with ``j >= 1``.

    Returns:
        (z, c) arrays of shape (n_rows, J).
    """
    dn = field.grid.dn
    z = np.maximum(np.diff(field.values, axis=1) / dn, 0.0)
    c = np.empty_like(z)
    for k, t in enumerate(field.times):
        c[k] = optimal_harvest(field.objective, field.growth, field.density, t, z[k])
    return z, c


class _Controls:
    """Fast ``(c, z, xbar)`` lookups along a path; inputs are trusted."""

    def __init__(self, field: ValueField):
        self.field = field
        self.objective = field.objective
        self.growth = field.growth
        self.nodes = field.density.nodes
        self.weights = field.density.weights

    def __call__(self, row, t, n):
        obj = self.objective
        # n = 0 is absorbing; report the n -> 0+ gradient but harvest nothing
        z = gradient_n(self.field, row, n if n > 0 else self.field.grid.dn)
        X = self.growth.at_nodes(t, self.nodes)
        scale = obj.scale(z)
        if obj.robust:
            _, xbar = tilt_statistics(X, self.weights, scale, obj.mu)
        else:
            xbar = expectation(X, self.weights)
        c = scale / (obj.gamma + z) * xbar if n > 0 else 0.0
        return float(c), float(z), float(xbar)


def _check_start(field, value, name):
    if not (0 <= value <= field.grid.M):
        raise InputError(f"{name}={value!r} outside [0, {field.grid.M}]")


def integrate_backward(field: ValueField, n_T) -> Trajectory:
    """Integrate the population equation backward from ``n(t1) = n_T``.

    Explicit Euler at the solver step. Stops early, with ``truncated=True``,
    once the population would exceed the grid cap.
    """
    _check_start(field, n_T, "n_T")
    grid = field.grid
    R = field.objective.mortality
    dt = grid.dt
    controls = _Controls(field)
    ts, ns, cs, zs, xs = [], [], [], [], []
    n = float(n_T)
    truncated = False
    for i in range(grid.I, -1, -1):
        t = grid.t0 + i * dt
        c, z, xbar = controls(field.row_near_level(i), t, n)
        ts.append(t); ns.append(n); cs.append(c); zs.append(z); xs.append(xbar)
        if i == 0:
            break
        if n == 0.0:
            continue
        n_prev = n + dt * (R(n) * n + c)
        if n_prev > grid.M:
            truncated = True
            break
        n = n_prev
    rev = slice(None, None, -1)
    return Trajectory(np.array(ts)[rev], np.array(ns)[rev], np.array(cs)[rev],
                      np.array(zs)[rev], np.array(xs)[rev], "backward", truncated)


def integrate_forward(field: ValueField, n_0) -> Trajectory:
    """Integrate the population equation forward from ``n(t0) = n_0``.

    Explicit Euler at the solver step; the population is absorbed at zero.
    """
    _check_start(field, n_0, "n_0")
    grid = field.grid
    R = field.objective.mortality
    dt = grid.dt
    controls = _Controls(field)
    ts, ns, cs, zs, xs = [], [], [], [], []
    n = float(n_0)
    for i in range(grid.I + 1):
        t = grid.t0 + i * dt
        c, z, xbar = controls(field.row_near_level(i), t, n)
        ts.append(t); ns.append(n); cs.append(c); zs.append(z); xs.append(xbar)
        if n > 0.0:
            n = max(0.0, n - dt * (R(n) * n + c))
    return Trajectory(np.array(ts), np.array(ns), np.array(cs), np.array(zs),
                      np.array(xs), "forward")


def distorted_weight_path(objective: ObjectiveSpec, growth: GrowthSpec,
                          density: HeterogeneityDensity, traj: Trajectory) -> np.ndarray:
    """Worst-case mean body weight along a trajectory's ``(t, z)`` samples."""
    return np.array([
        distorted_mean_weight(objective, growth, density, t, z)
        for t, z in zip(traj.t, traj.z)
    ])
