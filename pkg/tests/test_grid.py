import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from flmult.grid import (
    Grid,
    GridFunction,
    bracket,
    constant,
    convolve,
    delta,
    dft,
    from_bytes,
    from_csv,
    idft,
    load,
    pointwise_product,
    sample,
    save,
    to_bytes,
    to_csv,
)


def rel(a, b):
    return np.linalg.norm(np.ravel(a - b)) / np.linalg.norm(np.ravel(b))


def random_function(grid, seed=0):
    rng = np.random.default_rng(seed)
    return GridFunction(grid, rng.normal(size=grid.shape) + 1j * rng.normal(size=grid.shape))


def test_bracket_examples():
    assert bracket(0) == 1
    assert math.isclose(bracket(math.sqrt(3)), 2)
    assert math.isclose(bracket(np.ones(4)), math.sqrt(5))
    assert np.all(bracket(np.random.default_rng(1).normal(size=(10, 3))) >= 1)


def test_grid_validation():
    with pytest.raises(ValueError):
        Grid(1, 7, 0.1)
    with pytest.raises(ValueError):
        Grid(1, 8, 0.0)
    with pytest.raises(ValueError):
        Grid(4, 8, 0.1)


def test_grid_geometry():
    g = Grid(2, 8, 0.5)
    assert g.size == 64 and g.shape == (8, 8) and g.cell == 0.25
    assert g.axis[g.n // 2] == 0.0
    assert np.allclose(g.axis, -g.axis[::-1] - g.h)  # symmetric up to the extra negative point
    assert math.isclose(g.dual().h, 2 * math.pi / 4)
    assert g.points().shape == (64, 2)
    assert g.refine(2).compatible(Grid(2, 16, 0.25))


def test_values_must_be_finite_and_sized():
    g = Grid(1, 4, 1.0)
    with pytest.raises(ValueError):
        GridFunction(g, [1, 2, 3])
    with pytest.raises(ValueError):
        GridFunction(g, [1, 2, np.nan, 4])


def test_delta_transforms_to_constant():
    g = Grid(1, 32, 0.3)
    out = dft(delta(g))
    assert np.allclose(out.values, 1 / math.sqrt(2 * math.pi))


def test_gaussian_transform_against_analytic():
    g = Grid(1, 256, 0.1)
    f = sample(lambda x: np.exp(-x**2 / 2), g)
    fh = dft(f)
    exact = np.exp(-fh.grid.mesh()[0] ** 2 / 2)
    assert rel(fh.values, exact) < 1e-8


def test_gaussian_transform_2d():
    g = Grid(2, 64, 0.3)
    f = sample(lambda x, y: np.exp(-(x**2 + y**2) / 2), g)
    fh = dft(f)
    xi, eta = fh.grid.mesh()
    assert rel(fh.values, np.exp(-(xi**2 + eta**2) / 2)) < 1e-8


@pytest.mark.parametrize("d, n", [(1, 64), (2, 16), (3, 8)])
def test_inversion_and_plancherel(d, n):
    g = Grid(d, n, 0.37)
    f = random_function(g, d)
    fh = dft(f)
    assert fh.grid.compatible(g.dual())
    assert rel(idft(fh).values, f.values) < 1e-12
    assert math.isclose(fh.l2(), f.l2(), rel_tol=1e-10)


def test_box_convolution_is_triangle():
    g = Grid(1, 512, 0.02)
    box = sample(lambda x: (np.abs(x) <= 0.5).astype(float), g)
    tri = convolve(box, box)
    exact = np.maximum(0, 1 - np.abs(g.axis))
    assert np.max(np.abs(tri.values - exact)) < 2 * g.h


def test_convolution_integral_multiplicative():
    g = Grid(1, 256, 0.1)
    f = sample(lambda x: np.exp(-(x - 1) ** 2), g)
    k = sample(lambda x: (np.abs(x) <= 0.5) * 1.0, g)
    assert abs(convolve(f, k).integral() - f.integral() * k.integral()) < 1e-10


def test_convolution_with_delta_is_identity():
    g = Grid(2, 16, 0.4)
    f = random_function(g)
    assert rel(convolve(f, delta(g)).values, f.values) < 1e-12


def test_convolution_commutative_associative():
    g = Grid(1, 64, 0.2)
    a, b, c = (random_function(g, s) for s in range(3))
    assert rel(convolve(a, b).values, convolve(b, a).values) < 1e-10
    assert rel(convolve(convolve(a, b), c).values, convolve(a, convolve(b, c)).values) < 1e-10


def test_convolution_grid_mismatch():
    with pytest.raises(ValueError):
        convolve(constant(Grid(1, 8, 1.0)), constant(Grid(1, 8, 0.5)))


def test_convolution_against_direct_sum():
    g = Grid(1, 16, 0.3)
    a, b = random_function(g, 4), random_function(g, 5)
    n = g.n
    direct = np.array([
        g.h * sum(a.values[j] * b.values[(i - j + n // 2) % n] for j in range(n)) for i in range(n)
    ])
    assert rel(convolve(a, b).values, direct) < 1e-12


def test_pointwise_product_properties():
    g = Grid(1, 64, 0.2)
    f = sample(lambda x: np.exp(-x**2) * np.cos(x), g)
    assert np.array_equal(pointwise_product(f, constant(g)).values, f.values)
    even = pointwise_product(f, sample(lambda x: 1 / (1 + x**2), g))
    assert np.allclose(even.values, even.reflect().values)


def test_convolution_theorem():
    g = Grid(1, 256, 0.1)
    f = sample(lambda x: np.exp(-x**2 / 2), g)
    k = sample(lambda x: np.exp(-((x - 0.5) ** 2) / 3) * np.exp(1j * x), g)
    lhs = dft(pointwise_product(f, k))
    rhs = convolve(dft(f), dft(k)).scale(1 / math.sqrt(2 * math.pi))
    assert rel(lhs.values, rhs.values) < 1e-8


def test_sample_examples():
    g = Grid(2, 8, 0.5)
    assert np.all(sample(lambda x, y: 1.0, g).values == 1)
    centre = (g.n // 2,) * 2
    assert sample(lambda x, y: (1 + x**2 + y**2) ** 0.7, g).values[centre] == 1
    assert sample(lambda x, y: np.exp(-(x**2 + y**2)), g).values[centre] == 1


def test_refinement_consistency():
    f = lambda x: np.exp(-x**2 / 2)  # noqa: E731
    exact = math.pi**0.25
    errs = []
    for n, h in [(64, 0.4), (128, 0.2), (256, 0.1)]:
        errs.append(abs(sample(f, Grid(1, n, h)).l2() - exact))
    # spectral accuracy: at least second order
    assert errs[2] <= errs[0] / 4 + 1e-14


def test_reflect_is_involution():
    g = Grid(2, 8, 0.5)
    f = random_function(g)
    assert np.array_equal(f.reflect().reflect().values, f.values)
    assert f.reflect().values[g.n // 2 + 1, g.n // 2] == f.values[g.n // 2 - 1, g.n // 2]


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 3), st.integers(0, 10_000))
def test_serialization_roundtrip(d, seed):
    g = Grid(d, 4, 0.25 + seed / 1e4)
    f = random_function(g, seed)
    assert np.array_equal(from_bytes(to_bytes(f)).values, f.values)
    back = from_csv(to_csv(f))
    assert back.grid == g and np.array_equal(back.values, f.values)


def test_save_load(tmp_path):
    f = random_function(Grid(1, 8, 0.5))
    for name in ("f.csv", "f.bin"):
        save(f, tmp_path / name)
        assert np.array_equal(load(tmp_path / name).values, f.values)


def test_bad_serialized_data():
    with pytest.raises(ValueError):
        from_bytes(b"nonsense")
    with pytest.raises(ValueError):
        from_csv("index,re,im\n0,1,0\n")
