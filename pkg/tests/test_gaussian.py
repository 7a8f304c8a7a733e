import math

import numpy as np
import pytest
from numpy.polynomial.hermite_e import hermegauss

from burgerslab.gaussian import (
    invariant_expectation,
    invariant_second_moment,
    invariant_trig_linear_moment,
    ou_covariance,
    ou_gradient,
    ou_transition_expectation,
    truncated_energy,
)
from burgerslab.test_functions import parse_member


def gauss_hermite_2d(f, std1, std2, order=60):
    """E f(X1, X2) for independent centred normals (probabilists' Hermite rule)."""
    nodes, weights = hermegauss(order)
    weights = weights / math.sqrt(2 * math.pi)
    a, b = np.meshgrid(std1 * nodes, std2 * nodes, indexing="ij")
    return float(np.sum(np.outer(weights, weights) * f(a, b)))


def test_oracle_trig_linear_moment():
    # frozen value from the independent quadrature below
    phi = parse_member("sin 1 1:2,2:-1.5", 4)
    m_vec = np.array([0.7, 1.3, 0.0, 0.0])
    q = ou_covariance(4)
    oracle = gauss_hermite_2d(lambda a, b: np.sin(2 * a - 1.5 * b) * (0.7 * a + 1.3 * b),
                              math.sqrt(q[0]), math.sqrt(q[1]))
    assert invariant_trig_linear_moment(phi, m_vec) == pytest.approx(oracle, abs=1e-14)
    assert oracle == pytest.approx(0.0411824279, abs=1e-9)
    assert invariant_trig_linear_moment(parse_member("cos 1 1:2,2:-1.5", 4), m_vec) == 0.0


def test_oracle_second_moment():
    for spec in ("sin 2 1:1.5,2:0.5", "cos 0.5 1:-1,2:2"):
        phi = parse_member(spec, 3)
        q = ou_covariance(3)
        oracle = gauss_hermite_2d(lambda a, b: phi(np.stack([a, b, 0 * a], axis=-1)) ** 2,
                                  math.sqrt(q[0]), math.sqrt(q[1]))
        assert invariant_second_moment(phi) == pytest.approx(oracle, abs=1e-13)


def test_invariant_covariance():
    q = ou_covariance(3)
    np.testing.assert_allclose(q, 1 / (2 * np.pi**2 * np.array([1, 4, 9])))
    assert truncated_energy(16) == pytest.approx(0.0802639, abs=1e-7)
    assert truncated_energy(4000) == pytest.approx(1 / 12 - 1 / (2 * np.pi**2 * 4000), abs=1e-8)


def test_transition_limits():
    phi = parse_member("cos 1 1:1,2:2", 4)
    x = np.array([0.5, -0.2, 0, 0])
    assert ou_transition_expectation(phi, x, 0.0) == pytest.approx(phi(x))
    assert ou_transition_expectation(phi, x, 50.0) == pytest.approx(invariant_expectation(phi))


def test_gradient_matches_finite_difference():
    phi = parse_member("sin 1 1:1.3,2:-0.4", 4)
    x = np.array([0.5, -0.2, 0.1, 0])
    h = np.array([1.0, 0.5, 0, 0])
    eps = 1e-6
    fd = (ou_transition_expectation(phi, x + eps * h, 0.1)
          - ou_transition_expectation(phi, x - eps * h, 0.1)) / (2 * eps)
    assert ou_gradient(phi, x, 0.1, h) == pytest.approx(fd, abs=1e-8)
