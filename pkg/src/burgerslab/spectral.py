"""Dirichlet sine-basis representation of L^2(0, 1).

A field is stored as its coefficient vector ``x`` on the orthonormal basis
``e_k(xi) = sqrt(2) sin(k pi xi)``, ``k = 1..N``. Arrays of shape ``(N,)``
are single fields; shape ``(m, N)`` is a batch of ``m`` fields and every
function here broadcasts over the leading axis.

Grid quantities live on a uniform mesh of ``M`` sub-intervals of [0, 1]; the
``M - 1`` interior nodes carry the samples and the endpoint samples are zero.
The trapezoid rule on this mesh integrates ``cos(j pi xi)`` exactly for
``j < 2M``, so with ``M >= 2N`` the quadratic nonlinearity is projected
without aliasing.
"""

from functools import lru_cache

import numpy as np

BLOWUP_LIMIT = 1e12


class DomainError(ValueError):
    """An argument lies outside the mathematical domain of an operation."""


def eigenvalue(k):
    """Return ``alpha_k = (k pi)^2``, the k-th eigenvalue of ``-d^2/dxi^2``."""
    if int(k) != k or k < 1:
        raise DomainError(f"mode index must be a positive integer, got {k!r}")
    return float((k * np.pi) ** 2)


@lru_cache(maxsize=None)
def _eigenvalues(n_modes):
    alpha = (np.arange(1, n_modes + 1) * np.pi) ** 2
    alpha.flags.writeable = False
    return alpha


def eigenvalues(n_modes):
    """Eigenvalues ``alpha_1..alpha_N`` as a read-only array."""
    if n_modes < 1:
        raise DomainError(f"n_modes must be >= 1, got {n_modes}")
    return _eigenvalues(int(n_modes))


def as_field(coeffs, n_modes=None):
    """Validate and return coefficients as a float64 array."""
    x = np.asarray(coeffs, dtype=np.float64)
    if x.ndim not in (1, 2) or x.shape[-1] < 1:
        raise DomainError(f"expected shape (N,) or (m, N), got {x.shape}")
    if n_modes is not None and x.shape[-1] != n_modes:
        raise DomainError(f"expected {n_modes} modes, got {x.shape[-1]}")
    if not np.all(np.isfinite(x)):
        raise DomainError("field coefficients must be finite")
    return x


def basis_vector(k, n_modes):
    """Coefficient vector of ``e_k`` truncated to ``n_modes``."""
    if not 1 <= k <= n_modes:
        raise DomainError(f"mode {k} outside 1..{n_modes}")
    x = np.zeros(n_modes)
    x[k - 1] = 1.0
    return x


def sparse_field(modes, n_modes):
    """Build a field from a ``{mode: value}`` mapping."""
    x = np.zeros(n_modes)
    for k, value in modes.items():
        if not 1 <= k <= n_modes:
            raise DomainError(f"mode {k} outside 1..{n_modes}")
        x[k - 1] = value
    return x


def default_grid_points(n_modes):
    return 2 * n_modes


class SpectralGrid:
    """Transform matrices between ``N`` sine modes and ``M - 1`` grid nodes.

    Attributes
    ----------
    synth : (M-1, N) array
        ``synth @ x`` gives the field values at the interior nodes.
    deriv : (N, M-1) array
        ``deriv @ w`` gives the sine coefficients of ``d/dxi w`` for a grid
        function ``w`` vanishing at the endpoints (integration by parts
        against ``e_k`` turns the derivative into a cosine quadrature).
    weight : float
        Trapezoid weight ``1/M``.
    """

    def __init__(self, n_modes, m_points=None):
        if m_points is None:
            m_points = default_grid_points(n_modes)
        if n_modes < 1:
            raise DomainError(f"n_modes must be >= 1, got {n_modes}")
        if m_points < 2 * n_modes:
            raise DomainError(f"grid needs m_points >= 2*n_modes, got {m_points} < {2 * n_modes}")
        self.n_modes = n_modes
        self.m_points = m_points
        self.nodes = np.arange(1, m_points) / m_points
        k = np.arange(1, n_modes + 1)
        phase = np.pi * np.outer(self.nodes, k)
        self.synth = np.sqrt(2.0) * np.sin(phase)
        self.weight = 1.0 / m_points
        self.analysis = self.weight * self.synth.T
        self.deriv = -(np.sqrt(2.0) * np.pi * self.weight) * k[:, None] * np.cos(phase).T
        for arr in (self.synth, self.analysis, self.deriv, self.nodes):
            arr.flags.writeable = False

    def to_grid(self, x):
        return x @ self.synth.T

    def from_grid(self, values):
        return values @ self.analysis.T

    def integrate(self, values):
        """Trapezoid integral over [0, 1] of grid samples (last axis)."""
        return self.weight * np.sum(values, axis=-1)

    def derivative_projection(self, values):
        return values @ self.deriv.T


@lru_cache(maxsize=64)
def spectral_grid(n_modes, m_points=None):
    return SpectralGrid(n_modes, m_points)


def to_grid(x, m_points=None):
    """SpectralField -> GridField (values at the interior nodes)."""
    x = as_field(x)
    return spectral_grid(x.shape[-1], m_points).to_grid(x)


def from_grid(values, n_modes):
    """GridField -> SpectralField; exact for fields in the first ``M - 1`` modes."""
    values = np.asarray(values, dtype=np.float64)
    m_points = values.shape[-1] + 1
    return spectral_grid(n_modes, m_points).from_grid(values)


def sobolev_norm(x, alpha):
    """Spectral norm ``(sum_k alpha_k^alpha x_k^2)^(1/2)``."""
    x = np.asarray(x, dtype=np.float64)
    weights = eigenvalues(x.shape[-1]) ** alpha
    return np.sqrt(np.sum(weights * x * x, axis=-1))


def lp_norm(x, p, m_points=None):
    """Quadrature approximation of the L^p(0, 1) norm; ``p = inf`` gives the grid max."""
    if not p >= 1:
        raise DomainError(f"L^p norm needs p >= 1, got {p}")
    x = as_field(x)
    n_modes = x.shape[-1]
    if m_points is None:
        m_points = 4 * n_modes
    grid = spectral_grid(n_modes, m_points)
    values = np.abs(grid.to_grid(x))
    if np.isinf(p):
        return np.max(values, axis=-1)
    return grid.integrate(values**p) ** (1.0 / p)


def burgers_b(x, m_points=None):
    """Galerkin projection of ``d/dxi (x^2)`` onto the retained modes."""
    x = as_field(x)
    grid = spectral_grid(x.shape[-1], m_points)
    u = grid.to_grid(x)
    return grid.derivative_projection(u * u)


def burgers_jacobian_apply(x, eta, m_points=None):
    """Action of the Jacobian ``b'(x) eta = d/dxi (2 x eta)``."""
    x = as_field(x)
    eta = as_field(eta, x.shape[-1])
    grid = spectral_grid(x.shape[-1], m_points)
    return grid.derivative_projection(2.0 * grid.to_grid(x) * grid.to_grid(eta))


def apply_fractional_power(x, beta):
    """Coefficient-wise ``x_k -> alpha_k^beta x_k``, i.e. ``(-A)^beta x``."""
    x = np.asarray(x, dtype=np.float64)
    return eigenvalues(x.shape[-1]) ** beta * x


def apply_laplacian(x):
    """``A x = -alpha_k x_k``."""
    x = np.asarray(x, dtype=np.float64)
    return -eigenvalues(x.shape[-1]) * x


def inner(x, y):
    """L^2 inner product along the last axis."""
    return np.sum(np.asarray(x) * np.asarray(y), axis=-1)


def cube_pairing(x, eta, m_points=None):
    """Quadrature of ``<x^3, eta>`` on the dealiasing grid."""
    x = as_field(x)
    grid = spectral_grid(x.shape[-1], m_points)
    u = grid.to_grid(x)
    return grid.integrate(u**3 * grid.to_grid(eta))
