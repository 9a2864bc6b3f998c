import numpy as np
import pytest
from hypothesis import given, strategies as st

from teng.geometry import l2_inner, l2_norm, make_rng, subsample_params, tensor_grid


def test_two_point_grid():
    g = tensor_grid(2, 2)
    assert {tuple(p) for p in g.points} == {(0, 0), (0, np.pi), (np.pi, 0), (np.pi, np.pi)}
    assert np.isclose(g.weight, np.pi ** 2, rtol=1e-15)


def test_row_order_is_lexicographic():
    g = tensor_grid(2, 3)
    assert np.allclose(g.points[:3, 0], 0) and np.allclose(g.points[:3, 1], [0, 2 * np.pi / 3, 4 * np.pi / 3])


def test_three_dim_volume():
    g = tensor_grid(3, 4)
    assert g.n_points == 64
    assert np.isclose(g.weight, (np.pi / 2) ** 3, rtol=1e-14)


def test_unequal_lengths():
    g = tensor_grid(2, 64, [2, 2 * np.pi])
    axis0, axis1 = np.unique(g.points[:, 0]), np.unique(g.points[:, 1])
    assert np.allclose(np.diff(axis0), 2 / 64) and np.allclose(np.diff(axis1), 2 * np.pi / 64)
    assert np.isclose(g.weight, 2 * 2 * np.pi / 4096, rtol=1e-14)


@given(st.integers(1, 3), st.integers(2, 12))
def test_weight_times_count_is_volume(d, n):
    lengths = [1.5 + i for i in range(d)]
    g = tensor_grid(d, n, lengths)
    assert abs(g.weight * g.n_points - np.prod(lengths)) <= 1e-12 * np.prod(lengths)


def test_small_grid_rejected():
    with pytest.raises(ValueError):
        tensor_grid(2, 1)


def test_inner_products():
    g = tensor_grid(2, 64)
    s, c = np.sin(g.points[:, 0]), np.cos(g.points[:, 0])
    assert np.isclose(l2_inner(g, np.ones(4096), np.ones(4096)), 4 * np.pi ** 2, rtol=1e-14)
    assert abs(l2_inner(g, s, c)) <= 1e-12
    assert abs(l2_inner(g, s, s) - 2 * np.pi ** 2) <= 1e-10
    assert np.isclose(l2_norm(g, s), np.sqrt(2) * np.pi)


@given(st.integers(-7, 7), st.integers(-7, 7), st.integers(-7, 7), st.integers(-7, 7))
def test_quadrature_exact_for_fourier_modes(k1, k2, m1, m2):
    g = tensor_grid(2, 16)
    x = g.points
    f = np.cos(k1 * x[:, 0] + k2 * x[:, 1])
    h = np.cos(m1 * x[:, 0] + m2 * x[:, 1])
    # exact integral of cos(a.x) cos(b.x) over the torus
    exact = 0.0
    for sign in (1, -1):
        if k1 + sign * m1 == 0 and k2 + sign * m2 == 0:
            exact += 2 * np.pi ** 2
    assert abs(l2_inner(g, f, h) - exact) <= 1e-10


def test_length_mismatch():
    with pytest.raises(ValueError):
        l2_inner(tensor_grid(2, 4), np.ones(16), np.ones(15))


def test_subsample_full_set():
    assert np.array_equal(subsample_params(10, 10, make_rng(0)), np.arange(10))


def test_subsample_deterministic_and_valid():
    a = subsample_params(1000, 100, make_rng(3))
    b = subsample_params(1000, 100, make_rng(3))
    assert np.array_equal(a, b)
    assert len(np.unique(a)) == 100 and a.max() < 1000 and np.all(np.diff(a) > 0)


def test_subsample_advances_state():
    rng = make_rng(3)
    assert not np.array_equal(subsample_params(1000, 100, rng), subsample_params(1000, 100, rng))


@pytest.mark.parametrize("n_sub", [0, 11])
def test_subsample_out_of_range(n_sub):
    with pytest.raises(ValueError):
        subsample_params(10, n_sub, make_rng(0))


def test_subsample_uniform_coverage():
    rng = make_rng(11)
    counts = np.zeros(20)
    for _ in range(10_000):
        counts[subsample_params(20, 10, rng)] += 1
    freq = counts / 10_000
    assert np.all(np.abs(freq / 0.5 - 1) <= 0.05)


def test_rng_state_serializable():
    rng = make_rng(9)
    rng.random(5)
    state = rng.bit_generator.state
    clone = np.random.Generator(np.random.Philox())
    clone.bit_generator.state = state
    assert np.array_equal(rng.random(4), clone.random(4))
