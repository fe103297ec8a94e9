import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from robust_harvest import (
    InputError,
    ObjectiveSpec,
    PRESETS,
    SolveGrid,
    density_weights,
    distorted_weight_path,
    gradient_n,
    integrate_backward,
    integrate_forward,
    mean_weight,
    optimal_harvest,
    policy_field,
    solve,
)
from robust_harvest.solver import ValueField


def _field(values, M=4.0, t0=0.0, t1=2.0):
    values = np.asarray(values, dtype=float)
    grid = SolveGrid(I=values.shape[0] - 1, J=values.shape[1] - 1, M=M, t0=t0, t1=t1)
    return ValueField(values, np.arange(values.shape[0]), grid,
                      ObjectiveSpec(t0=t0, t1=t1), PRESETS["2021"], density_weights())


@pytest.fixture(scope="module")
def no_harvest_field():
    obj = ObjectiveSpec(alpha=0.0)
    growth = PRESETS["2021"]
    return solve(obj, growth, density_weights(), SolveGrid.from_cfl(obj, growth, J=200))


def test_gradient_of_affine_field():
    n = np.arange(5.0)
    f = _field(np.tile(2.5 * n, (3, 1)))
    for q in (0.3, 1.0, 2.7, 4.0):
        assert gradient_n(f, 1, q) == pytest.approx(2.5)


def test_gradient_of_constant_field_is_zero():
    f = _field(np.full((3, 5), 7.0))
    assert gradient_n(f, 0, 2.2) == 0.0


def test_gradient_positive_for_increasing_rows(small_field_2021):
    f = small_field_2021
    for n in (0.1, 2.0, 5.0, 9.9):
        assert gradient_n(f, 0, n) > 0


def test_gradient_cell_choice():
    f = _field(np.tile([0.0, 1.0, 3.0, 6.0, 10.0], (3, 1)))
    assert gradient_n(f, 0, 1.0) == 1.0  # n on a node uses the cell below
    assert gradient_n(f, 0, 1.5) == 2.0


def test_gradient_rejects_outside():
    f = _field(np.zeros((3, 5)))
    with pytest.raises(InputError):
        gradient_n(f, 0, 0.0)
    with pytest.raises(InputError):
        gradient_n(f, 0, 4.5)


def test_policy_field_matches_pointwise(small_field_2021):
    f = small_field_2021
    z, c = policy_field(f)
    assert z.shape == (len(f.levels), f.grid.J)
    k, j = 5, 12
    t = f.times[k]
    assert z[k, j - 1] == gradient_n(f, k, f.populations[j])
    assert c[k, j - 1] == pytest.approx(
        optimal_harvest(f.objective, f.growth, f.density, t, z[k, j - 1]), rel=1e-12)
    assert np.all(c >= 0) and np.all(c <= f.objective.harvest_cap(f.growth))


def test_forward_without_harvest_matches_exponential_decay(no_harvest_field):
    traj = integrate_forward(no_harvest_field, 1.0)
    assert traj.n[-1] == pytest.approx(math.exp(-1.2), abs=1e-3)
    exact = np.exp(-0.01 * (traj.t - traj.t[0]))
    assert np.max(np.abs(traj.n - exact)) <= 1e-3
    assert np.all(traj.c == 0.0)


def test_backward_without_harvest_recovers_start():
    # backward Euler drifts by about R^2 T dt / 2, so use a step well below the CFL one
    obj = ObjectiveSpec(alpha=0.0)
    growth = PRESETS["2021"]
    field = solve(obj, growth, density_weights(), SolveGrid(I=2400, J=40))
    traj = integrate_backward(field, math.exp(-1.2))
    assert traj.n[0] == pytest.approx(1.0, abs=1e-3)
    assert not traj.truncated
    assert traj.t[0] == 61.0 and traj.t[-1] == pytest.approx(181.0)


def test_zero_population_paths(small_field_2021):
    back = integrate_backward(small_field_2021, 0.0)
    fwd = integrate_forward(small_field_2021, 0.0)
    assert np.all(back.n == 0.0) and np.all(fwd.n == 0.0)
    assert np.all(back.c == 0.0)


def test_backward_paths_do_not_cross(small_field_2021):
    paths = [integrate_backward(small_field_2021, v) for v in (0.5, 1.0, 2.0, 4.0)]
    lengths = {len(p) for p in paths if not p.truncated}
    assert len(lengths) <= 1
    full = [p for p in paths if not p.truncated]
    for lo, hi in zip(full, full[1:]):
        assert np.all(lo.n < hi.n)


def test_round_trip(small_field_2021):
    f = small_field_2021
    back = integrate_backward(f, 1.0)
    assert not back.truncated
    fwd = integrate_forward(f, back.n[0])
    euler_tol = f.grid.dt * (f.grid.t1 - f.grid.t0) * 0.01
    assert fwd.n[-1] == pytest.approx(1.0, abs=10 * max(euler_tol, 1e-3))


def test_backward_truncates_above_cap(small_field_2021):
    traj = integrate_backward(small_field_2021, 9.9)
    assert traj.truncated
    assert traj.n.max() <= small_field_2021.grid.M


def test_path_start_validation(small_field_2021):
    with pytest.raises(InputError):
        integrate_forward(small_field_2021, -1.0)
    with pytest.raises(InputError):
        integrate_backward(small_field_2021, 11.0)


def test_distorted_weight_path(small_field_2021):
    f = small_field_2021
    traj = integrate_forward(f, 3.0)
    growth, dens = f.growth, f.density
    plain = distorted_weight_path(ObjectiveSpec(mu=math.inf), growth, dens, traj)
    np.testing.assert_array_equal(plain, [mean_weight(growth, dens, t) for t in traj.t])
    strong = distorted_weight_path(ObjectiveSpec(mu=0.01), growth, dens, traj)
    weak = distorted_weight_path(ObjectiveSpec(mu=0.1), growth, dens, traj)
    assert np.all(strong <= weak * (1 + 1e-12))
    assert np.all(weak <= plain * (1 + 1e-12))
    np.testing.assert_allclose(strong, traj.xbar, rtol=1e-12)


@settings(max_examples=15)
@given(n0=st.floats(0.0, 10.0))
def test_forward_paths_nonincreasing(small_field_2021, n0):
    traj = integrate_forward(small_field_2021, n0)
    assert np.all(np.diff(traj.n) <= 0)
    assert traj.n.min() >= 0
