import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from burgerslab.spectral import DomainError, apply_laplacian, basis_vector, burgers_b
from burgerslab.test_functions import (
    CylindricalFunction,
    LinearFunctional,
    TestFamily,
    directional_derivative,
    format_member,
    generator_apply,
    parse_member,
    random_family,
)


def test_cosine_examples():
    phi = CylindricalFunction(basis_vector(1, 4), "cosine")
    assert phi(np.zeros(4)) == 1.0
    np.testing.assert_array_equal(phi.grad(np.zeros(4)), np.zeros(4))
    x = np.array([np.pi / 2, 0, 0, 0])
    assert phi(x) == pytest.approx(0, abs=1e-15)
    np.testing.assert_allclose(phi.grad(x), [-1, 0, 0, 0])


def test_sine_and_scale():
    phi = CylindricalFunction(2 * basis_vector(1, 3), "sine", scale=3.0)
    x = np.array([0.1, 5.0, -2.0])
    assert phi(x) == pytest.approx(3 * np.sin(0.2))
    assert phi.deriv(x, basis_vector(1, 3)) == pytest.approx(6 * np.cos(0.2))
    assert phi.deriv(x, basis_vector(2, 3)) == 0.0


def test_constant_member():
    phi = parse_member("cos 2.5", 4)
    x = np.random.default_rng(0).standard_normal((5, 4))
    np.testing.assert_array_equal(phi(x), 2.5)
    np.testing.assert_array_equal(phi.grad(x), 0.0)


def test_parse_and_format_round_trip():
    phi = parse_member("sin -0.5 1:1.25,3:-2", 4, "a")
    assert phi.phase_kind == "sine" and phi.scale == -0.5
    np.testing.assert_array_equal(phi.ell, [1.25, 0, -2, 0])
    again = parse_member(format_member(phi), 4)
    np.testing.assert_array_equal(again.ell, phi.ell)
    assert again.scale == phi.scale and again.phase_kind == phi.phase_kind


@pytest.mark.parametrize("bad", ["tan 1 1:1", "cos", "cos 1 1", "cos 1 9:1"])
def test_parse_rejects(bad):
    with pytest.raises(ValueError):
        parse_member(bad, 4)


def test_invalid_kind():
    with pytest.raises(DomainError):
        CylindricalFunction(basis_vector(1, 2), "exp")


def test_batched_directional_derivative():
    phi = parse_member("cos 1 1:1,2:-0.5", 3)
    gen = np.random.default_rng(1)
    x, h = gen.standard_normal((7, 3)), gen.standard_normal((7, 3))
    expected = np.einsum("ij,ij->i", phi.grad(x), h)
    np.testing.assert_allclose(directional_derivative(phi, x, h), expected, atol=1e-14)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from(["cosine", "sine"]))
def test_gradient_matches_finite_difference(seed, kind):
    gen = np.random.default_rng(seed)
    phi = CylindricalFunction(gen.uniform(-2, 2, 4), kind, gen.uniform(0.5, 2))
    x, h = gen.standard_normal(4), gen.standard_normal(4)
    eps = 1e-6
    fd = (phi(x + eps * h) - phi(x - eps * h)) / (2 * eps)
    assert phi.deriv(x, h) == pytest.approx(fd, abs=1e-7)


def test_hessian_trace_matches_finite_difference():
    phi = parse_member("sin 1.5 1:0.7,2:-1.1", 3)
    x = np.array([0.3, -0.2, 0.9])
    eps = 1e-4
    trace = sum((phi(x + eps * e) - 2 * phi(x) + phi(x - eps * e)) / eps**2 for e in np.eye(3))
    assert phi.hessian_trace(x) == pytest.approx(trace, abs=1e-6)


def test_generator_examples():
    # at x = 0 only the trace term survives
    phi = parse_member("cos 1 1:2", 4)
    assert generator_apply(phi, np.zeros(4)) == pytest.approx(-2.0)
    x = np.array([0.4, -0.1, 0.2, 0.05])
    drift = apply_laplacian(x) + burgers_b(x)
    expected = 0.5 * phi.hessian_trace(x) + phi.deriv(x, drift)
    assert generator_apply(phi, x) == pytest.approx(expected)


def test_resized_preserves_values():
    phi = parse_member("sin 1 1:1,2:0.5", 2)
    big = phi.resized(6)
    x = np.array([0.3, 0.7, 9, 9, 9, 9])
    assert big(x) == pytest.approx(phi(x[:2]))
    with pytest.raises(DomainError):
        big.resized(1)


def test_random_family_is_seeded():
    a, b = random_family(10, 8, seed=3), random_family(10, 8, seed=3)
    assert len(a) == 10
    for u, v in zip(a, b):
        np.testing.assert_array_equal(u.ell, v.ell)
        assert u.phase_kind == v.phase_kind
    for member in a:
        assert 1 <= np.count_nonzero(member.ell) <= 3
        assert not np.any(member.ell[4:])
    with pytest.raises(DomainError):
        TestFamily(())


def test_linear_functional():
    f = LinearFunctional(np.array([1.0, -2.0]), scale=0.5)
    x = np.array([[1.0, 1.0], [2.0, 0.0]])
    np.testing.assert_allclose(f(x), [-0.5, 1.0])
    assert f.deriv(x[0], np.array([0.0, 1.0])) == pytest.approx(-1.0)
