import json
import math

import numpy as np
import pytest

from infheat.analysis import (benilan_crandall, boundary_growth_check,
                              convergence_report, decay_fit,
                              eventual_positivity_time,
                              mask_inclusion_violations, positivity_certificate,
                              positivity_set, rescaled_bound,
                              rescaled_monotonicity, universal_bound_check,
                              waiting_time, waiting_time_bound)
from infheat.domain import (Field, build_interval_grid, build_rectangle_grid)
from infheat.evolution import SolverConfig, Trajectory, evolve, to_rescaled
from infheat.giant import giant_ode_oracle


@pytest.fixture(scope="module")
def grid():
    return build_interval_grid(-1, 1, 101)


@pytest.fixture(scope="module")
def giant(grid):
    return giant_ode_oracle(1.0).profile_on(grid)


def separable(grid, giant, times):
    times = np.asarray(times, dtype=float)
    vals = times[:, None] ** -0.5 * giant.values[None, :]
    return Trajectory(grid, "original-t", times, vals)


def test_decay_fit_separable_late_window(grid, giant):
    tr = separable(grid, giant, np.geomspace(1e3, 1e6, 25))
    fit = decay_fit(tr)
    assert fit.exponent == pytest.approx(-0.5, abs=1e-3)
    assert fit.certified
    assert fit.C1 >= 1.0


def test_decay_fit_constant_not_certified(grid, giant):
    times = np.geomspace(1, 100, 10)
    tr = Trajectory(grid, "original-t", times,
                    np.tile(giant.values, (10, 1)))
    fit = decay_fit(tr)
    assert fit.exponent == pytest.approx(0.0, abs=1e-12)
    assert not fit.certified


def test_decay_fit_needs_points(grid, giant):
    tr = separable(grid, giant, [1.0, 2.0, 3.0])
    with pytest.raises(ValueError):
        decay_fit(tr)
    with pytest.raises(ValueError):
        decay_fit(to_rescaled(separable(grid, giant, np.arange(1.0, 8.0))))


def test_universal_bound_separable(grid, giant):
    tr = separable(grid, giant, np.geomspace(0.5, 100, 12))
    assert universal_bound_check(tr, giant, t_min=1.0) == 0.0
    z = Trajectory(grid, "original-t", np.array([1.0, 2.0]),
                   np.zeros((2, grid.n_nodes)))
    assert universal_bound_check(z, giant) < 0
    with pytest.raises(ValueError):
        universal_bound_check(tr, giant, t_min=1e6)
    with pytest.raises(ValueError):
        universal_bound_check(tr, giant_ode_oracle(1.0).profile_on(
            build_interval_grid(-1, 1, 51)))


def test_convergence_separable(grid, giant):
    tr = separable(grid, giant, np.geomspace(1, 1000, 20))
    rep = convergence_report(tr, giant)
    assert rep.final_relative < 1e-14
    assert rep.nonincreasing
    assert rep.window == (100.0, 1000.0)


def test_rescaled_monotonicity_and_bound(grid, giant):
    v = to_rescaled(separable(grid, giant, np.geomspace(1, 100, 10)))
    assert rescaled_monotonicity(v) <= 1e-14
    assert rescaled_bound(v) == pytest.approx(giant.sup())
    grow = Trajectory(grid, "rescaled-s", np.array([0.0, 1.0]),
                      np.stack([giant.values, 0.5 * giant.values]))
    assert rescaled_monotonicity(grow) == pytest.approx(0.5)


def test_benilan_crandall(grid, giant):
    tr = separable(grid, giant, np.geomspace(0.1, 100, 15))
    assert abs(benilan_crandall(tr)) < 1e-14
    u0 = Field.from_function(grid, lambda p: np.maximum(1 - 4 * p[:, 0] ** 2,
                                                        0))
    run = evolve(u0, 0.0, 5.0, SolverConfig(record_times=(0.01, 0.1, 1.0)))
    assert benilan_crandall(run) <= 1e-6


def test_positivity_set_cases(grid):
    f = Field.from_function(grid, lambda p: np.maximum(p[:, 0], 0))
    m = positivity_set(f)
    np.testing.assert_array_equal(m, (grid.points[:, 0] > 0)
                                  & (grid.mask == 1))
    assert not positivity_set(Field.zeros(grid)).any()
    assert positivity_set(f, 0.5).sum() == np.sum(
        (grid.points[:, 0] > 0.5) & (grid.mask == 1))
    with pytest.raises(ValueError):
        positivity_set(f, -1.0)


def test_mask_inclusion(grid):
    a = np.maximum(grid.points[:, 0], 0)
    b = np.maximum(grid.points[:, 0] + 0.5, 0)
    a[[0, -1]] = b[[0, -1]] = 0
    grows = Trajectory(grid, "original-t", np.array([0.0, 1.0]),
                       np.stack([a, b]))
    shrinks = Trajectory(grid, "original-t", np.array([0.0, 1.0]),
                         np.stack([b, a]))
    assert mask_inclusion_violations(grows) == 0
    assert mask_inclusion_violations(shrinks) == 25


def test_eventual_positivity(grid, giant):
    half = np.where(grid.points[:, 0] > 0, giant.values, 0.0)
    tr = Trajectory(grid, "original-t", np.array([0.0, 1.0, 2.0]),
                    np.stack([half, giant.values, giant.values]))
    assert eventual_positivity_time(tr) == 1.0
    never = Trajectory(grid, "original-t", np.array([0.0, 1.0]),
                       np.stack([half, half]))
    assert eventual_positivity_time(never) is None
    rect = build_rectangle_grid(0, 1, 0, 1, 0.25)
    with pytest.raises(ValueError):
        eventual_positivity_time(Trajectory(rect, "original-t", np.array([0.]),
                                            np.zeros((1, rect.n_nodes))))


def test_positivity_certificate(grid, giant):
    half = np.where(grid.points[:, 0] > 0, giant.values, 0.0)
    v = Trajectory(grid, "rescaled-s", np.array([0.0, 1.0, 2.0]),
                   np.stack([half, giant.values, 2 * giant.values]))
    K = (np.abs(grid.points[:, 0]) < 0.5) & (grid.mask == 1)
    cert = positivity_certificate(v, K)
    assert cert.s_K == 1.0 and cert.holds
    assert cert.mu_K == pytest.approx(giant.values[K].min())
    left = (grid.points[:, 0] < -0.5) & (grid.mask == 1)
    flat = Trajectory(grid, "rescaled-s", np.array([0.0]), half[None, :])
    assert positivity_certificate(flat, left) is None
    with pytest.raises(ValueError):
        positivity_certificate(v, np.array([0]))


def test_waiting_time_bound_examples():
    assert waiting_time_bound(1.0, 0.2, 0.25) == pytest.approx(0.0016)
    assert waiting_time_bound(0.0, 0.2, 0.25) == pytest.approx(0.0016)
    assert waiting_time_bound(2.0, 1.0, 0.01) == pytest.approx(1 / 64)


def test_waiting_time_measurement(grid):
    u0 = Field.from_function(grid, lambda p: np.maximum(p[:, 0], 0) ** 2 / 4)
    tr = evolve(u0, 0.0, 1.0, SolverConfig(record_times=list(
        np.geomspace(1e-6, 0.5, 40))))
    rep = waiting_time(tr, 0.0, 1.0, 0.2, 1.0, 1e-6)
    assert math.isfinite(rep.tau_measured) and not rep.censored
    assert rep.T_pred == waiting_time_bound(1.0, 0.2, 1.0)
    json.dumps(rep.to_dict())
    with pytest.raises(ValueError):
        waiting_time(tr, 0.5, 1.0, 0.2, 1.0, 1e-6)
    with pytest.raises(ValueError):
        waiting_time(tr, 0.0, 0.1, 0.2, 1.0, 1e-6)
    with pytest.raises(ValueError):
        waiting_time(tr, 0.005, 1.0, 0.2, 1.0, 1e-6)


def test_boundary_growth(grid, giant):
    z = Trajectory(grid, "rescaled-s", np.array([0.0, 1.0]),
                   np.zeros((2, grid.n_nodes)))
    rep = boundary_growth_check(z, 0.25, 1.0, 1.0)
    assert rep.max_violation < 0 and rep.omega == 0
    json.dumps(rep.to_dict())
    with pytest.raises(ValueError):
        boundary_growth_check(z, 0.5, 1.0, 1.0)
    v = Trajectory(grid, "rescaled-s", np.array([0.0]),
                   giant.values[None, :])
    rep = boundary_growth_check(v, 0.25, -1.0, 1.0)
    assert rep.omega == pytest.approx(giant.values[grid.points[:, 0]
                                                   < -0.75].max())
    assert rep.max_violation <= 0


def test_reports_json(grid, giant):
    tr = separable(grid, giant, np.geomspace(1, 1000, 20))
    for rep in (decay_fit(tr), convergence_report(tr, giant)):
        json.dumps(rep.to_dict())
