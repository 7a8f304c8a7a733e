"""Closed forms for the linear (heat / Ornstein-Uhlenbeck) dynamics.

With ``b = 0`` every mode is an independent OU process,
``X_k(t) ~ N(e^{-a_k t} x_k, (1 - e^{-2 a_k t}) / (2 a_k))``, and the invariant
law is the centred Gaussian with covariance ``Q = -A^{-1}/2``.
"""

import numpy as np

from .spectral import eigenvalues


def ou_covariance(n_modes, t=np.inf):
    """Diagonal of the time-``t`` covariance ``Q_t`` (``t=inf``: invariant ``Q``)."""
    alpha = eigenvalues(n_modes)
    if np.isinf(t):
        return 1.0 / (2.0 * alpha)
    return -np.expm1(-2.0 * alpha * t) / (2.0 * alpha)


def ou_mean(x, t):
    x = np.asarray(x, dtype=np.float64)
    return np.exp(-eigenvalues(x.shape[-1]) * t) * x


def heat_semigroup(h, t):
    """``e^{tA} h``."""
    return ou_mean(h, t)


def char_cos_sin(ell, mean, cov_diag):
    """``(E cos<l, X>, E sin<l, X>)`` for ``X ~ N(mean, diag(cov_diag))``."""
    damp = np.exp(-0.5 * np.sum(cov_diag * ell * ell))
    phase = float(np.dot(ell, mean))
    return damp * np.cos(phase), damp * np.sin(phase)


def ou_transition_expectation(phi, x, t):
    """``P_t phi(x)`` in closed form for a cylindrical ``phi`` under OU dynamics."""
    c, s = char_cos_sin(phi.ell, ou_mean(x, t), ou_covariance(phi.n_modes, t))
    return phi.scale * (c if phi.phase_kind == "cosine" else s)


def ou_gradient(phi, x, t, h):
    """``D_x P_t phi(x) . h`` for OU dynamics: differentiate the characteristic function."""
    c, s = char_cos_sin(phi.ell, ou_mean(x, t), ou_covariance(phi.n_modes, t))
    direction = float(np.dot(phi.ell, heat_semigroup(h, t)))
    if phi.phase_kind == "cosine":
        return -phi.scale * s * direction
    return phi.scale * c * direction


def invariant_trig_linear_moment(phi, m_vec):
    """``E[phi(X) <m, X>]`` for ``X ~ N(0, Q)``.

    Gaussian integration by parts: ``E[f(X) <m, X>] = E[<D f(X), Q m>]``,
    giving ``scale <Q l, m> e^{-<Q l, l>/2}`` for sine and 0 for cosine.
    """
    q = ou_covariance(phi.n_modes)
    if phi.phase_kind == "cosine":
        return 0.0
    return phi.scale * float(np.sum(q * phi.ell * m_vec)) * np.exp(-0.5 * np.sum(q * phi.ell**2))


def invariant_expectation(phi):
    c, s = char_cos_sin(phi.ell, np.zeros(phi.n_modes), ou_covariance(phi.n_modes))
    return phi.scale * (c if phi.phase_kind == "cosine" else s)


def invariant_second_moment(phi):
    """``E[phi(X)^2]`` under the invariant Gaussian."""
    q = ou_covariance(phi.n_modes)
    damp2 = np.exp(-2.0 * np.sum(q * phi.ell**2))
    sign = 1.0 if phi.phase_kind == "cosine" else -1.0
    return phi.scale**2 * 0.5 * (1.0 + sign * damp2)


def truncated_energy(n_modes):
    """``E|X|^2 = sum_k 1/(2 a_k)`` under the invariant Gaussian."""
    return float(np.sum(ou_covariance(n_modes)))
