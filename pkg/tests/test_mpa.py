import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from orlicz_mpa.builtins import DeskScalar
from orlicz_mpa.energy import Problem, bump
from orlicz_mpa.field import Grid
from orlicz_mpa.mpa import (NoValley, PathCollapse, SolverConfig, initial_valley_point,
                            mountain_pass, run_mountain_pass)
from orlicz_mpa.nfunction import power_nfunction
from orlicz_mpa.nonlinearity import build_scalar_modified


def quartic(lam=1.0):
    E = lambda x: float(x[0] ** 2 / 2 - lam * x[0] ** 4 / 4)
    G = lambda x: np.array([x[0] - lam * x[0] ** 3])
    return E, G


def double_well():
    E = lambda z: float(((z[0] ** 2 - 1) ** 2 + z[1] ** 2) / 4)
    G = lambda z: np.array([(z[0] ** 2 - 1) * z[0], z[1] / 2])
    return E, G


def arc(start, end, n=16):
    th = np.linspace(np.pi, 0, n)
    pts = [np.array([np.cos(a), np.sin(a)]) for a in th]
    pts[0], pts[-1] = np.asarray(start, float), np.asarray(end, float)
    return pts


def test_quartic_toy():
    E, G = quartic()
    res = mountain_pass(E, G, [0.0], [2.0], SolverConfig(residual_tol=1e-10))
    assert res.converged
    assert res.x[0] == pytest.approx(1.0, abs=1e-4)
    assert res.level == pytest.approx(0.25, abs=1e-4)


@given(st.floats(0.25, 4.0))
@settings(max_examples=15)
def test_quartic_lambda_scaling(lam):
    # critical point 1/sqrt(lam), level 1/(4 lam)
    E, G = quartic(lam)
    res = mountain_pass(E, G, [0.0], [2.0 / np.sqrt(lam)], SolverConfig(residual_tol=1e-10))
    assert res.x[0] == pytest.approx(lam**-0.5, rel=1e-6)
    assert res.level == pytest.approx(0.25 / lam, rel=1e-8)


def test_double_well_saddle():
    E, G = double_well()
    start, end = [-1.0, 0.01], [1.0, 0.0]
    res = mountain_pass(E, G, start, end, SolverConfig(residual_tol=1e-8),
                        initial_path=arc(start, end))
    assert res.converged
    assert res.level == pytest.approx(0.25, abs=1e-4)
    assert np.linalg.norm(res.x) < 1e-4


def test_end_must_be_lower():
    E, G = quartic()
    with pytest.raises(ValueError):
        mountain_pass(E, G, [0.0], [0.5])


def test_path_collapse_detected():
    # energy decreasing along the segment: the maximum sits at the start
    E = lambda x: float(-x[0])
    G = lambda x: np.array([-1.0])
    with pytest.raises(PathCollapse):
        mountain_pass(E, G, [0.0], [1.0])


def test_solver_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(path_nodes=8)
    with pytest.raises(ValueError):
        SolverConfig(residual_tol=0.0)


def small_desk(lam, n=24, L=4.0):
    d = DeskScalar()
    grid = Grid(2, n, L)
    mod = build_scalar_modified(d.nonlinearity(), d.delta)
    return Problem([power_nfunction(d.p)], mod, lam, grid)


def test_no_valley_at_lambda_zero():
    with pytest.raises(NoValley):
        initial_valley_point(small_desk(0.0))


def test_valley_point_against_dense_scan():
    p = small_desk(10.0)
    state, s = initial_valley_point(p)
    assert p.energy(state) < 0
    b = p.pack([bump(p.grid)])
    ss = np.linspace(1e-4, s, 4001)
    g = np.array([p.energy(x * b) for x in ss])
    # the profile is positive before its zero crossing and the scan maximum
    # is the straight-path barrier
    cross = ss[np.argmax((g[1:] < 0) & (g[:-1] >= 0)) + 1]
    assert cross < s <= 1.25 * cross * (1 + 1e-9)
    assert g.max() > 0


@pytest.fixture(scope="module")
def small_runs():
    return {lam: run_mountain_pass(small_desk(lam)) for lam in (10.0, 100.0)}


def test_small_desk_converges(small_runs):
    for r in small_runs.values():
        assert r.converged, r.summary()
        assert r.residual_sup <= 1e-5


def test_level_between_zero_and_path_bound(small_runs):
    for r in small_runs.values():
        assert 0 < r.level <= r.path_max_bound * (1 + 1e-9)


def test_level_and_sup_decrease_with_lambda(small_runs):
    a, b = small_runs[10.0], small_runs[100.0]
    assert b.level < a.level and b.sup_norm < a.sup_norm


def test_solution_is_positive_and_small(desk_solution):
    _, res, sol = desk_solution
    assert sol.converged
    assert sol.u.values.min() >= -1e-12
    assert sol.sup_norm < res.inner_radius
