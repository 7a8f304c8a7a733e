import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy import integrate

from burgerslab.spectral import (
    DomainError,
    SpectralGrid,
    apply_fractional_power,
    basis_vector,
    burgers_b,
    burgers_jacobian_apply,
    eigenvalue,
    from_grid,
    inner,
    lp_norm,
    sobolev_norm,
    to_grid,
)

PI = math.pi


def random_fields(count, n, seed):
    gen = np.random.default_rng(seed)
    decay = gen.uniform(0, 2, size=(count, 1))
    return gen.standard_normal((count, n)) * np.arange(1, n + 1) ** (-decay)


field_strategy = st.integers(1, 12).flatmap(
    lambda n: arrays(np.float64, n, elements=st.floats(-5, 5, allow_nan=False))
)


# oracles, computed with adaptive quadrature independently of the grid code

def test_oracle_l4_norm_of_first_mode():
    value, _ = integrate.quad(lambda s: 4 * math.sin(PI * s) ** 4, 0, 1, epsabs=1e-14)
    assert value == pytest.approx(1.5, abs=1e-12)
    assert lp_norm(basis_vector(1, 4), 4) == pytest.approx(1.5**0.25, rel=1e-12)


def test_oracle_b_of_first_mode():
    # project d/dxi (2 sin^2(pi xi)) on each e_k by quadrature
    def coefficient(k):
        f = lambda s: 2 * PI * math.sin(2 * PI * s) * math.sqrt(2) * math.sin(k * PI * s)  # noqa: E731
        return integrate.quad(f, 0, 1, epsabs=1e-13)[0]

    n = 6
    expected = np.array([coefficient(k) for k in range(1, n + 1)])
    assert expected[1] == pytest.approx(math.sqrt(2) * PI, rel=1e-12)
    np.testing.assert_allclose(burgers_b(basis_vector(1, n)), expected, atol=1e-12)


def test_oracle_b_generic_field_by_quadrature():
    n = 5
    x = np.array([0.3, -1.0, 0.5, 0.2, -0.7])

    def u(s):
        return sum(x[k - 1] * math.sqrt(2) * math.sin(k * PI * s) for k in range(1, n + 1))

    def du(s):
        return sum(x[k - 1] * math.sqrt(2) * k * PI * math.cos(k * PI * s) for k in range(1, n + 1))

    expected = [integrate.quad(lambda s: 2 * u(s) * du(s) * math.sqrt(2) * math.sin(k * PI * s),
                               0, 1, limit=200, epsabs=1e-13)[0] for k in range(1, n + 1)]
    np.testing.assert_allclose(burgers_b(x), expected, atol=1e-10)


# operation examples

def test_eigenvalues():
    assert eigenvalue(1) == pytest.approx(9.869604401, abs=1e-9)
    assert eigenvalue(2) == pytest.approx(39.47841760, abs=1e-8)
    for bad in (0, -1, 1.5):
        with pytest.raises(DomainError):
            eigenvalue(bad)


def test_sobolev_norm_examples():
    e1 = basis_vector(1, 4)
    assert sobolev_norm(e1, 0) == pytest.approx(1.0)
    assert sobolev_norm(e1, 2) == pytest.approx(PI**2)
    assert sobolev_norm(e1 + basis_vector(2, 4), 1) == pytest.approx(PI * math.sqrt(5), rel=1e-12)
    assert sobolev_norm(e1, -1) == pytest.approx(1 / PI)


def test_lp_norm_examples():
    e1 = basis_vector(1, 8)
    assert abs(lp_norm(e1, 2) - 1.0) <= 1e-10
    assert lp_norm(e1, 4) == pytest.approx(1.10668, abs=1e-5)
    assert abs(lp_norm(e1, np.inf) - math.sqrt(2)) <= 1e-10
    with pytest.raises(DomainError):
        lp_norm(e1, 0.5)


def test_burgers_b_examples():
    n = 8
    assert np.all(burgers_b(np.zeros(n)) == 0)
    expected = np.zeros(n)
    expected[1] = math.sqrt(2) * PI
    np.testing.assert_allclose(burgers_b(basis_vector(1, n)), expected, atol=1e-12)
    np.testing.assert_allclose(burgers_b(2 * basis_vector(1, n)), 4 * expected, atol=1e-12)


def test_jacobian_examples():
    n = 8
    x = random_fields(20, n, 1)
    np.testing.assert_allclose(burgers_jacobian_apply(x, x), 2 * burgers_b(x), atol=1e-10)
    eta = random_fields(1, n, 2)[0]
    assert np.all(burgers_jacobian_apply(np.zeros(n), eta) == 0)
    expected = np.zeros(n)
    expected[1] = 2 * math.sqrt(2) * PI
    np.testing.assert_allclose(burgers_jacobian_apply(basis_vector(1, n), basis_vector(1, n)),
                               expected, atol=1e-12)


def test_fractional_power_examples():
    x = random_fields(5, 6, 3)
    np.testing.assert_array_equal(apply_fractional_power(x, 0), x)
    np.testing.assert_allclose(apply_fractional_power(basis_vector(1, 3), 1), [PI**2, 0, 0])
    np.testing.assert_allclose(apply_fractional_power(apply_fractional_power(x, 0.7), -0.7), x,
                               rtol=1e-12)


def test_grid_requires_dealiasing_points():
    with pytest.raises(DomainError):
        SpectralGrid(8, 15)


def test_field_vanishes_at_boundary():
    grid = SpectralGrid(5, 10)
    x = random_fields(1, 5, 4)[0]
    k = np.arange(1, 6)
    # the basis itself, evaluated at 0 and 1
    ends = np.sqrt(2) * np.sin(np.pi * np.outer([0.0, 1.0], k)) @ x
    np.testing.assert_allclose(ends, 0, atol=1e-14)
    assert grid.nodes[0] > 0 and grid.nodes[-1] < 1


# properties

@settings(max_examples=60, deadline=None)
@given(field_strategy, st.integers(0, 3))
def test_grid_round_trip(x, extra):
    n = x.size
    values = to_grid(x, 2 * n + extra)
    np.testing.assert_allclose(from_grid(values, n), x, rtol=1e-12, atol=1e-12 * (1 + np.abs(x).max()))


def test_parseval_on_random_fields():
    x = random_fields(1000, 16, 5)
    l2 = lp_norm(x, 2)
    assert np.all(np.abs(l2 - sobolev_norm(x, 0)) <= 1e-8 * sobolev_norm(x, 0))


@pytest.mark.parametrize("triple", [(0.0, 0.5, 1.0), (-1.0, 0.0, 1.0)])
def test_interpolation_inequality(triple):
    a, b, g = triple
    x = random_fields(1000, 16, 6)
    theta = (g - b) / (g - a)
    bound = sobolev_norm(x, a) ** theta * sobolev_norm(x, g) ** (1 - theta)
    assert np.all(sobolev_norm(x, b) <= bound + 1e-9)


def test_agmon_inequality():
    x = random_fields(1000, 16, 7)
    bound = np.sqrt(sobolev_norm(x, 0) * sobolev_norm(x, 1))
    assert np.all(lp_norm(x, np.inf) <= bound + 1e-9)


@settings(max_examples=80, deadline=None)
@given(field_strategy)
def test_dissipativity_pairing(x):
    scale = 1 + float(np.sum(x * x)) ** 1.5 * x.size
    assert abs(inner(burgers_b(x), x)) <= 1e-8 * scale


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 10), st.integers(0, 2**32 - 1))
def test_jacobian_linear_in_direction(n, seed):
    x, e1, e2 = random_fields(3, n, seed)
    lhs = burgers_jacobian_apply(x, e1 + e2)
    rhs = burgers_jacobian_apply(x, e1) + burgers_jacobian_apply(x, e2)
    np.testing.assert_allclose(lhs, rhs, atol=1e-12 * (1 + np.abs(lhs).max()))


def test_batched_calls_match_single():
    x = random_fields(4, 6, 8)
    batch = burgers_b(x)
    for i in range(4):
        np.testing.assert_allclose(batch[i], burgers_b(x[i]), atol=1e-14)
