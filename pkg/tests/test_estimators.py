import math

import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from robust_harvest import (
    Candidate,
    FitRanges,
    InputError,
    ObjectiveSpec,
    ParameterError,
    RobustHarvestSolver,
    UncertainLogisticRegressor,
    interpolate,
    theoretical_moments,
)

from conftest import SUSTAIN


@pytest.fixture(scope="module")
def fitted_solver():
    est = RobustHarvestSolver(growth="2022", objective=ObjectiveSpec(terminal=SUSTAIN),
                              n_pop_steps=40, n_quad=60)
    return est.fit()


def test_regressor_recovers_generator():
    truth = Candidate(8.0, 0.036, 30.0, 120.0)
    t = np.linspace(0, 180, 25)
    y, _ = theoretical_moments(truth, t)
    est = UncertainLogisticRegressor(ranges=FitRanges.around(truth, steps=2))
    est.fit(t.reshape(-1, 1), y)
    assert est.candidate_ == truth
    assert est.loss_ == 0.0
    np.testing.assert_allclose(est.predict(t), y, rtol=1e-14)
    mean, std = est.predict(t, return_std=True)
    assert std[0] <= 1e-12 and np.all(std[1:] > 0)
    assert est.score(t, y) == pytest.approx(1.0)


def test_regressor_params_and_clone():
    est = UncertainLogisticRegressor(n_quad=80, n_jobs=2)
    assert est.get_params() == {"ranges": None, "n_quad": 80, "n_jobs": 2}
    copy = clone(est)
    assert copy.get_params() == est.get_params()
    with pytest.raises(NotFittedError):
        est.predict([1.0])


def test_solver_predicts_field_values(fitted_solver):
    f = fitted_solver.field_
    X = np.array([[f.times[3], f.populations[7]], [f.grid.t1, 10.0]])
    out = fitted_solver.predict(X)
    assert out[0] == f.values[3, 7]
    assert out[1] == pytest.approx(15.0)
    assert out[0] == interpolate(f, *X[0])


def test_solver_policy_queries(fitted_solver):
    X = np.array([[61.0, 0.0], [61.0, 2.0], [150.0, 8.0]])
    c = fitted_solver.harvest_rate(X)
    assert c[0] == 0.0 and np.all(c[1:] > 0)
    xbar = fitted_solver.distorted_mean_weight(X)
    assert np.all(xbar > 0)


def test_solver_paths(fitted_solver):
    back, fwd = fitted_solver.paths(terminal_values=[0.25, 0.5], initial_values=[5.0])
    assert len(back) == 2 and len(fwd) == 1
    assert not back[1].truncated
    assert np.all(back[0].n < back[1].n)


def test_solver_validates_queries(fitted_solver):
    with pytest.raises(InputError):
        fitted_solver.predict([[61.0, -1.0]])
    with pytest.raises(InputError):
        fitted_solver.predict([[10.0, 1.0, 2.0, 3.0]])


def test_solver_unfitted_and_clone():
    est = RobustHarvestSolver(n_pop_steps=10)
    with pytest.raises(NotFittedError):
        est.predict([[61.0, 1.0]])
    assert clone(est).get_params()["n_pop_steps"] == 10


def test_solver_explicit_steps_and_beta_density():
    est = RobustHarvestSolver(growth="2021", density="beta", density_a=2, density_b=5,
                              n_quad=30, n_pop_steps=10, n_time_steps=2000)
    est.fit()
    assert est.grid_.I == 2000
    assert est.field_.values.min() >= 0
    assert est.density_.kind == "beta"


def test_solver_rejects_unknown_preset():
    with pytest.raises(ParameterError):
        RobustHarvestSolver(growth="1999").fit()
