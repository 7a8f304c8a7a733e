"""Interpolation and Agmon inequalities on random spectral fields.

Margins are ``rhs - lhs``, so a non-negative margin means the inequality
holds for that field.
"""

import numpy as np

from .spectral import lp_norm, sobolev_norm

INTERPOLATION_TRIPLES = ((0.0, 0.5, 1.0), (-1.0, 0.0, 1.0))


def interpolation_margin(x, alpha, beta, gamma):
    """``|x|_a^{(g-b)/(g-a)} |x|_g^{(b-a)/(g-a)} - |x|_b``."""
    if not alpha < beta < gamma:
        raise ValueError("need alpha < beta < gamma")
    theta = (gamma - beta) / (gamma - alpha)
    bound = sobolev_norm(x, alpha) ** theta * sobolev_norm(x, gamma) ** (1.0 - theta)
    return bound - sobolev_norm(x, beta)


def agmon_margin(x, m_points=None):
    """``|x|^{1/2} |x|_1^{1/2} - |x|_{L^inf}``, the sup taken on the quadrature grid."""
    x = np.asarray(x, dtype=np.float64)
    return np.sqrt(sobolev_norm(x, 0.0) * sobolev_norm(x, 1.0)) - lp_norm(x, np.inf, m_points)


def random_fields(count, n_modes, seed):
    """Fields with Gaussian coefficients and a random algebraic decay ``k^{-s}``, ``s in [0, 2]``.

    Mixing rough and smooth fields exercises both ends of each inequality.
    """
    gen = np.random.default_rng(seed)
    decay = gen.uniform(0.0, 2.0, size=(count, 1))
    k = np.arange(1, n_modes + 1)
    return gen.standard_normal((count, n_modes)) * k ** (-decay)


def inequality_suite(count=1000, n_modes=16, seed=0):
    """Rows ``(case, alpha, beta, gamma, margin)``: every field for each triple, then Agmon."""
    fields = random_fields(count, n_modes, seed)
    rows = []
    for alpha, beta, gamma in INTERPOLATION_TRIPLES:
        margins = interpolation_margin(fields, alpha, beta, gamma)
        rows.extend((f"interpolation-{i:04d}", alpha, beta, gamma, float(m))
                    for i, m in enumerate(margins))
    margins = agmon_margin(fields)
    rows.extend((f"agmon-{i:04d}", "", "", "", float(m)) for i, m in enumerate(margins))
    return rows
