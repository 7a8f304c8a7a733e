"""Monte-Carlo estimators for the transition and Feynman-Kac semigroups.

All estimators are deterministic in ``(inputs, seed)``: sample ``i`` always
uses stream ``i`` of ``seed``. Estimators called with the same seed are
therefore driven by common random numbers and may be compared sample by
sample (see :func:`paired_difference`).
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import rng
from .dynamics import run_paths, step_count
from .kernels import ACC_CUBE, ACC_CUBE_MOMENT, ACC_FK, ACC_ITO
from .spectral import DomainError, apply_laplacian, as_field, burgers_jacobian_apply

MAX_FAILED_FRACTION = 1e-3


class EstimationError(RuntimeError):
    pass


@dataclass
class MonteCarloEstimate:
    mean: float
    std_error: float
    n_samples: int
    n_failed: int = 0
    samples: np.ndarray | None = field(default=None, repr=False, compare=False)

    @classmethod
    def from_samples(cls, values, n_failed=0, keep=True):
        values = np.asarray(values, dtype=np.float64)
        n = values.size
        if n == 0:
            raise EstimationError("no usable samples (every path failed)")
        se = float(np.std(values, ddof=1) / math.sqrt(n)) if n > 1 else 0.0
        return cls(float(np.mean(values)), se, n, int(n_failed), values if keep else None)

    @classmethod
    def exact(cls, value, n_samples=1):
        return cls(float(value), 0.0, n_samples, 0, None)

    @property
    def valid(self):
        return self.n_failed <= MAX_FAILED_FRACTION * (self.n_samples + self.n_failed)

    def to_dict(self):
        return {
            "mean": self.mean,
            "std_error": self.std_error,
            "n_samples": self.n_samples,
            "n_failed": self.n_failed,
        }


def paired_difference(a, b):
    """Estimate of ``a - b`` from sample-aligned (common-seed) estimates."""
    if a.samples is None or b.samples is None or a.samples.shape != b.samples.shape:
        se = math.hypot(a.std_error, b.std_error)
        return MonteCarloEstimate(a.mean - b.mean, se, min(a.n_samples, b.n_samples),
                                  max(a.n_failed, b.n_failed))
    return MonteCarloEstimate.from_samples(a.samples - b.samples, max(a.n_failed, b.n_failed))


def simulate_endpoints(x, t, m, cfg, seed, h=None, track=None):
    """Run ``m`` paths from ``x`` to time ``t``; returns a ``PathBatch``."""
    if m < 1:
        raise DomainError(f"need at least one sample, got m={m}")
    n_steps, dt = step_count(t, cfg.dt)
    if track is None:
        track = cfg.nonlinear or cfg.k_fk > 0 or h is not None
    keys = rng.stream_keys(seed, m)
    return run_paths(x, cfg, n_steps, dt, keys, h=h, track=track)


def _estimate(values, batch):
    ok = batch.ok
    return MonteCarloEstimate.from_samples(np.asarray(values)[ok], batch.n_failed)


def estimate_pt(phi, x, t, m, cfg, seed):
    """``P_t phi(x) = E phi(X(t, x))``."""
    x = as_field(x, cfg.n_modes)
    if t == 0:
        return MonteCarloEstimate.exact(phi(x), m)
    batch = simulate_endpoints(x, t, m, cfg, seed)
    return _estimate(phi(batch.x), batch)


def fk_weight(batch, k_fk):
    return np.exp(-k_fk * batch.acc[:, ACC_FK])


def estimate_st(phi, x, t, m, cfg, seed):
    """``S_t phi(x) = E[phi(X(t, x)) exp(-K int_0^t |X|_{L4}^4 ds)]`` with ``K = cfg.k_fk``."""
    x = as_field(x, cfg.n_modes)
    if t == 0:
        return MonteCarloEstimate.exact(phi(x), m)
    batch = simulate_endpoints(x, t, m, cfg, seed, track=True)
    return _estimate(phi(batch.x) * fk_weight(batch, cfg.k_fk), batch)


def grad_pt_tangent(phi, x, t, h, m, cfg, seed):
    """``D_x P_t phi(x) . h = E <D phi(X(t, x)), eta^h(t, x)>`` (pathwise)."""
    x = as_field(x, cfg.n_modes)
    h = as_field(h, cfg.n_modes)
    if t == 0:
        return MonteCarloEstimate.exact(phi.deriv(x, h), m)
    if not np.any(h):
        return MonteCarloEstimate.exact(0.0, m)
    batch = simulate_endpoints(x, t, m, cfg, seed, h=h)
    return _estimate(phi.deriv(batch.x, batch.eta), batch)


def grad_st_tangent(phi, x, t, h, m, cfg, seed):
    """Pathwise ``D_x S_t phi(x) . h``: differentiate both ``phi(X_t)`` and the weight."""
    x = as_field(x, cfg.n_modes)
    h = as_field(h, cfg.n_modes)
    if t == 0:
        return MonteCarloEstimate.exact(phi.deriv(x, h), m)
    batch = simulate_endpoints(x, t, m, cfg, seed, h=h, track=True)
    w = fk_weight(batch, cfg.k_fk)
    values = w * (phi.deriv(batch.x, batch.eta)
                  - 4.0 * cfg.k_fk * phi(batch.x) * batch.acc[:, ACC_CUBE])
    return _estimate(values, batch)


def bel_samples(phi, batch, t, k_fk):
    """Per-path BEL weights ``I1 + I2`` for ``D_x S_t phi . h``.

    ``I1 = w phi(X_t) (1/t) int <eta, dW>`` and
    ``I2 = -4K w phi(X_t) int (1 - s/t) <X^3, eta> ds``; the ``(1 - s/t)``
    factor removes the part of the weight's derivative that ``I1`` already
    carries, so the sum is unbiased for every ``K``.
    """
    w = fk_weight(batch, k_fk)
    values = phi(batch.x) * w
    ito = batch.acc[:, ACC_ITO] / t
    tail = batch.acc[:, ACC_CUBE] - batch.acc[:, ACC_CUBE_MOMENT] / t
    return values * (ito - 4.0 * k_fk * tail)


def grad_st_bel(phi, x, t, h, m, cfg, seed):
    """Derivative-free estimate of ``D_x S_t phi(x) . h`` (``phi`` need only be evaluable)."""
    if not t > 0:
        raise DomainError(f"the BEL weight needs t > 0, got {t}")
    if not cfg.noise:
        raise DomainError("the BEL weight needs noise")
    x = as_field(x, cfg.n_modes)
    h = as_field(h, cfg.n_modes)
    batch = simulate_endpoints(x, t, m, cfg, seed, h=h, track=True)
    return _estimate(bel_samples(phi, batch, t, cfg.k_fk), batch)


def gauss_legendre(t, n):
    nodes, weights = np.polynomial.legendre.leggauss(n)
    return 0.5 * t * (nodes + 1.0), 0.5 * t * weights


def commutation_direction(y, h, cfg):
    """``A h + b'(y) h`` for every state in ``y``."""
    g = np.broadcast_to(apply_laplacian(h), y.shape).copy()
    if cfg.nonlinear:
        g += burgers_jacobian_apply(y, np.broadcast_to(h, y.shape), cfg.m_points)
    return g


def correction_samples(phi, x, t, s, h, m, cfg, seed, m_inner=1):
    """Samples of ``<A h + b'(Y) h, D P_s phi(Y)>`` with ``Y = X(t - s, x)``.

    The outer path runs to ``t - s``; from its endpoint the tangent process
    starts in direction ``A h + b'(Y) h`` and runs for ``s``. With
    ``m_inner = 1`` the inner path continues the outer stream; larger values
    average ``m_inner`` independent inner paths per outer endpoint.

    Returns ``(values, n_failed)``.
    """
    n1, dt1 = step_count(t - s, cfg.dt)
    n2, dt2 = step_count(s, cfg.dt)
    keys = rng.stream_keys(seed, m)
    outer = run_paths(x, cfg, n1, dt1, keys, track=False)
    y = outer.x
    g = commutation_direction(y, h, cfg)
    if m_inner == 1:
        inner_keys = keys
        y_in, g_in, failed_in = y, g, outer.failed
    else:
        inner_keys = rng.stream_keys(rng.derive_seed(seed, "inner"), m * m_inner)
        y_in = np.repeat(y, m_inner, axis=0)
        g_in = np.repeat(g, m_inner, axis=0)
        failed_in = np.repeat(outer.failed, m_inner)
    inner = run_paths(y_in, cfg, n2, dt2, inner_keys, h=g_in, step0=n1 if m_inner == 1 else 0,
                      t0=t - s, track=False, failed=failed_in)
    values = phi.deriv(inner.x, inner.eta)
    if m_inner > 1:
        values = values.reshape(m, m_inner)
        failed = inner.failed.reshape(m, m_inner).any(axis=1)
        values = values.mean(axis=1)
    else:
        failed = inner.failed
    return values[~failed], int(np.count_nonzero(failed))


@dataclass
class CommutationReport:
    lhs: MonteCarloEstimate
    rhs_grad: MonteCarloEstimate
    rhs_correction: MonteCarloEstimate
    discrepancy: float
    combined_error: float
    node_estimates: list = field(default_factory=list, repr=False)

    @property
    def passed(self):
        return self.discrepancy <= 3.0 * self.combined_error

    def to_dict(self):
        return {
            "lhs": self.lhs.to_dict(),
            "rhs_grad": self.rhs_grad.to_dict(),
            "rhs_correction": self.rhs_correction.to_dict(),
            "discrepancy": self.discrepancy,
            "combined_error": self.combined_error,
        }


def verify_commutation(phi, x, t, h, m, cfg, seed, s_nodes=16, m_inner=1):
    """Check ``P_t(D phi . h) = D P_t phi . h - int_0^t P_{t-s}<A h + b'h, D P_s phi> ds``.

    The first two terms share their paths; the time integral uses
    Gauss-Legendre nodes, each with its own seed.
    """
    if not t > 0:
        raise DomainError(f"t must be positive, got {t}")
    x = as_field(x, cfg.n_modes)
    h = as_field(h, cfg.n_modes)
    if not np.any(h):
        zero = MonteCarloEstimate.exact(0.0, m)
        return CommutationReport(zero, zero, zero, 0.0, 0.0)
    batch = simulate_endpoints(x, t, m, cfg, seed, h=h)
    lhs = _estimate(phi.deriv(batch.x, h), batch)
    grad = _estimate(phi.deriv(batch.x, batch.eta), batch)
    nodes, weights = gauss_legendre(t, s_nodes)
    corr_mean = 0.0
    corr_var = 0.0
    n_failed = 0
    node_estimates = []
    for i, (s, w) in enumerate(zip(nodes, weights)):
        values, failed = correction_samples(phi, x, t, s, h, m, cfg,
                                            rng.derive_seed(seed, "node", i), m_inner)
        est = MonteCarloEstimate.from_samples(values, failed, keep=False)
        node_estimates.append((float(s), est))
        corr_mean += w * est.mean
        corr_var += (w * est.std_error) ** 2
        n_failed += failed
    correction = MonteCarloEstimate(float(corr_mean), math.sqrt(corr_var), m, n_failed)
    diff = paired_difference(lhs, grad)
    discrepancy = abs(lhs.mean - (grad.mean - correction.mean))
    combined = math.hypot(diff.std_error, correction.std_error)
    return CommutationReport(lhs, grad, correction, discrepancy, combined, node_estimates)


def ou_commutation_closed_form(ell, h, t):
    """The three terms for ``phi = <l, x>`` under OU dynamics.

    ``lhs = <l, h>``, ``grad = <e^{tA} h, l>``, ``correction = <(e^{tA} - I) h, l>``.
    """
    from .gaussian import heat_semigroup

    eth = heat_semigroup(h, t)
    return float(ell @ h), float(ell @ eth), float(ell @ (eth - h))
