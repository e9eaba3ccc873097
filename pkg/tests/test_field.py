import numpy as np
import pytest
from hypothesis import given, strategies as st

from orlicz_mpa.builtins import phi1_kernel
from orlicz_mpa.field import (DiscreteField, Grid, from_bytes, from_csv, gradient_magnitude,
                              integrate_values, load, lp_norm, luxemburg_norm, modular,
                              orlicz_sobolev_norm, random_bump_field, save, to_bytes, to_csv)
from orlicz_mpa.nfunction import build_from_kernel, power_nfunction

GRID = Grid(2, 32, 4.0)


def test_grid_validation():
    with pytest.raises(ValueError):
        Grid(4, 16, 1.0)
    with pytest.raises(ValueError):
        Grid(2, 4, 1.0)
    with pytest.raises(ValueError):
        Grid(3, 1024, 1.0)  # memory budget


def test_trapezoid_weights_integrate_bilinear_exactly():
    x = GRID.coords
    f = (1 + x[..., 0]) * (2 - x[..., 1])
    assert integrate_values(GRID, f) == pytest.approx(64 * 2, rel=1e-13)
    assert GRID.weights.sum() == pytest.approx(64.0)


def test_gaussian_lp_norm():
    g = Grid(2, 257, 8.0)
    u = g.sample(lambda x: np.exp(-np.sum(x**2, axis=-1)))
    # int exp(-2|x|^2) over R^2 = pi/2
    assert lp_norm(u, 2) == pytest.approx(np.sqrt(np.pi / 2), rel=1e-10)


@given(st.integers(0, 10_000), st.floats(1.2, 4.0))
def test_luxemburg_equals_lp_for_power(seed, p):
    u = random_bump_field(GRID, np.random.default_rng(seed))
    nf = power_nfunction(p, scale=p)  # Phi(t) = t^p
    assert luxemburg_norm(u, nf) == pytest.approx(lp_norm(u, p), rel=1e-9)


@given(st.integers(0, 10_000), st.floats(0.01, 100))
def test_luxemburg_homogeneous(seed, c):
    nf = build_from_kernel(phi1_kernel())
    u = random_bump_field(GRID, np.random.default_rng(seed))
    assert luxemburg_norm(u * c, nf) == pytest.approx(c * luxemburg_norm(u, nf), rel=1e-8)


@given(st.integers(0, 10_000))
def test_luxemburg_modular_is_one(seed):
    nf = build_from_kernel(phi1_kernel())
    u = random_bump_field(GRID, np.random.default_rng(seed))
    a = luxemburg_norm(u, nf)
    assert modular(u, nf, a) == pytest.approx(1.0, rel=1e-8)


@given(st.integers(0, 10_000), st.integers(0, 10_000))
def test_triangle_inequality(s1, s2):
    nf = build_from_kernel(phi1_kernel())
    u = random_bump_field(GRID, np.random.default_rng(s1))
    v = random_bump_field(GRID, np.random.default_rng(s2))
    assert luxemburg_norm(u + v, nf) <= (luxemburg_norm(u, nf) + luxemburg_norm(v, nf)) * (1 + 1e-9)


def test_zero_field():
    nf = power_nfunction(2.0)
    u = DiscreteField.zeros(GRID)
    assert luxemburg_norm(u, nf) == 0.0 and lp_norm(u, 3) == 0.0
    assert orlicz_sobolev_norm(u, nf) == 0.0


def test_gradient_of_linear_field():
    u = GRID.sample(lambda x: 3 * x[..., 0] - 4 * x[..., 1])
    g = gradient_magnitude(u).values
    assert np.allclose(g[2:-2, 2:-2], 5.0, rtol=1e-12)


def test_boundary_enforced():
    u = random_bump_field(GRID, np.random.default_rng(0))
    assert np.all(u.values[GRID.boundary_mask] == 0)


def test_serialization_round_trip(tmp_path):
    u = random_bump_field(GRID, np.random.default_rng(3))
    assert np.array_equal(from_bytes(to_bytes(u)).values, u.values)
    back = from_csv(to_csv(u))
    assert np.array_equal(back.values, u.values) and back.grid == u.grid
    for name in ("u.csv", "u.bin"):
        save(u, tmp_path / name)
        assert np.array_equal(load(str(tmp_path / name)).values, u.values)


def test_truncated_bytes_rejected():
    u = random_bump_field(GRID, np.random.default_rng(3))
    with pytest.raises(ValueError):
        from_bytes(to_bytes(u)[:-8])
