"""Integration-by-parts checks for the invariant measure.

Three variants:

* ``gaussian_exact`` -- heat dynamics, where the invariant law is Gaussian
  and the density ``v_h`` is explicit; both sides are also known in closed
  form.
* ``burgers_identity`` -- the integrated commutation identity
  ``int <D phi, h> dnu = int D P_t phi . h dnu - int_0^t int <A h + b'(x) h, D P_s phi> dnu ds``
  on a Burgers ensemble.
* ``theorem1_ratio`` -- the ratio ``|int <D phi, h> dnu| / (||phi||_{L^p(nu)} |h|_{1+delta})``
  over a family of test functions.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from . import gaussian, rng
from .dynamics import run_paths, step_count
from .invariant import batch_means, ensemble_estimate
from .semigroup import MonteCarloEstimate, commutation_direction, gauss_legendre
from .spectral import (
    DomainError,
    apply_fractional_power,
    as_field,
    eigenvalues,
    lp_norm,
    sobolev_norm,
)
from .test_functions import COSINE

GAUSSIAN_EXACT = "gaussian_exact"
BURGERS_IDENTITY = "burgers_identity_1_9"
GRADIENT_RATIO = "theorem1_ratio"


@dataclass
class IbpReport:
    lhs: MonteCarloEstimate
    rhs: MonteCarloEstimate
    discrepancy: float
    combined_error: float
    variant: str
    analytic_lhs: float | None = None
    analytic_rhs: float | None = None
    terms: dict = field(default_factory=dict)

    @property
    def analytic_residual(self):
        if self.analytic_lhs is None:
            return None
        return abs(self.analytic_lhs - self.analytic_rhs)

    @property
    def passed(self):
        ok = self.discrepancy <= 3.0 * self.combined_error
        if self.analytic_lhs is not None:
            ok = (ok and self.analytic_residual <= 1e-12
                  and abs(self.lhs.mean - self.analytic_lhs) <= 3.0 * self.lhs.std_error
                  and abs(self.rhs.mean - self.analytic_rhs) <= 3.0 * self.rhs.std_error)
        return ok

    def to_dict(self):
        out = {
            "variant": self.variant,
            "lhs": self.lhs.to_dict(),
            "rhs": self.rhs.to_dict(),
            "discrepancy": self.discrepancy,
            "combined_error": self.combined_error,
        }
        if self.analytic_lhs is not None:
            out.update(analytic_lhs=self.analytic_lhs, analytic_rhs=self.analytic_rhs,
                       analytic_residual=self.analytic_residual)
        for name, est in self.terms.items():
            out[name] = est.to_dict()
        return out


def gaussian_vh(x, h):
    """IBP density of the heat invariant measure in direction ``(-A)^{-1/2} h``.

    ``v_h(x) = sqrt(2) <Q^{-1/2} x, h>`` with ``Q = -A^{-1}/2``, i.e.
    ``2 sum_k alpha_k^{1/2} x_k h_k``.
    """
    x = np.asarray(x, dtype=np.float64)
    root = np.sqrt(eigenvalues(x.shape[-1]))
    return 2.0 * np.sum(root * x * np.asarray(h), axis=-1)


def gaussian_ibp_sides(phi, h):
    """Closed forms of both sides of the Gaussian IBP formula at exponent 1/2."""
    direction = apply_fractional_power(h, -0.5)
    c, s = gaussian.char_cos_sin(phi.ell, np.zeros(phi.n_modes), gaussian.ou_covariance(phi.n_modes))
    slope_mean = -s if phi.phase_kind == COSINE else c
    lhs = phi.scale * slope_mean * float(phi.ell @ direction)
    rhs = gaussian.invariant_trig_linear_moment(phi, 2.0 * np.sqrt(eigenvalues(phi.n_modes)) * h)
    return float(lhs), float(rhs)


def _require(ens, tag):
    if ens.dynamics_tag != tag:
        raise ValueError(f"this check needs a {tag} ensemble, got {ens.dynamics_tag}")


def verify_ibp_gaussian(phi, h, ens):
    """``int <(-A)^{-1/2} D phi, h> dmu = int phi v_h dmu`` on a heat ensemble."""
    _require(ens, "heat")
    h = as_field(h, ens.n_modes)
    x = ens.states
    lhs_vals = phi.deriv(x, apply_fractional_power(h, -0.5))
    rhs_vals = phi(x) * gaussian_vh(x, h)
    lhs = ensemble_estimate(np.broadcast_to(lhs_vals, (len(ens),)))
    rhs = ensemble_estimate(rhs_vals)
    d_mean, d_se = batch_means(lhs_vals - rhs_vals)
    a_lhs, a_rhs = gaussian_ibp_sides(phi, h)
    return IbpReport(lhs, rhs, abs(d_mean), d_se, GAUSSIAN_EXACT, a_lhs, a_rhs)


def _node_of_states(ens, s_nodes):
    n_chains = np.unique(ens.chain_ids).size
    if n_chains >= s_nodes:
        return np.asarray(ens.chain_ids) % s_nodes
    return np.arange(len(ens)) % s_nodes


def verify_ibp_burgers(phi, h, t, ens, cfg, seed, m=1, s_nodes=16, partition=True):
    """Integrated commutation identity on an ensemble of invariant states.

    Every term is a per-state quantity, so the discrepancy is an ensemble
    mean of per-state contributions and its error is a batch-means error
    that accounts for the correlation between the terms. With
    ``partition=True`` each quadrature node uses a disjoint subset of
    states (whole chains where possible) instead of all of them.
    """
    if not t > 0:
        raise DomainError(f"t must be positive, got {t}")
    h = as_field(h, ens.n_modes)
    n = len(ens)
    x = ens.states
    lhs_vals = phi.deriv(x, h)
    if not np.any(h):
        zero = ensemble_estimate(np.zeros(n))
        return IbpReport(zero, zero, 0.0, 0.0, BURGERS_IDENTITY)
    n_steps, dt = step_count(t, cfg.dt)
    starts = np.repeat(x, m, axis=0)
    keys = rng.stream_keys(rng.derive_seed(seed, "grad"), n * m)
    batch = run_paths(starts, cfg, n_steps, dt, keys, h=h, track=False)
    grad_vals = phi.deriv(batch.x, batch.eta).reshape(n, m)
    failed = batch.failed.reshape(n, m).any(axis=1)
    grad_vals = grad_vals.mean(axis=1)

    nodes, weights = gauss_legendre(t, s_nodes)
    node_of = _node_of_states(ens, s_nodes) if partition else None
    corr_vals = np.zeros(n)
    g = commutation_direction(x, h, cfg)
    for i, (s, w) in enumerate(zip(nodes, weights)):
        idx = np.flatnonzero(node_of == i) if partition else np.arange(n)
        if idx.size == 0:
            raise DomainError(f"quadrature node {i} received no states; use more chains or states")
        n2, dt2 = step_count(s, cfg.dt)
        keys = rng.stream_keys(rng.derive_seed(seed, "node", i), idx.size * m)
        run = run_paths(np.repeat(x[idx], m, axis=0), cfg, n2, dt2, keys,
                        h=np.repeat(g[idx], m, axis=0), track=False)
        vals = phi.deriv(run.x, run.eta).reshape(idx.size, m).mean(axis=1)
        failed[idx] |= run.failed.reshape(idx.size, m).any(axis=1)
        scale = n / idx.size if partition else 1.0
        corr_vals[idx] += w * scale * vals

    keep = ~failed
    n_failed = int(np.count_nonzero(failed))
    rhs_vals = grad_vals - corr_vals
    lhs = ensemble_estimate(lhs_vals[keep], n_failed)
    rhs = ensemble_estimate(rhs_vals[keep], n_failed)
    d_mean, d_se = batch_means((lhs_vals - rhs_vals)[keep])
    terms = {
        "rhs_grad": ensemble_estimate(grad_vals[keep], n_failed),
        "rhs_correction": ensemble_estimate(corr_vals[keep], n_failed),
    }
    return IbpReport(lhs, rhs, abs(d_mean), d_se, BURGERS_IDENTITY, terms=terms)


def ou_ibp_identity_closed_form(phi, h, t):
    """The three terms of the integrated identity for heat dynamics.

    Under the invariant Gaussian ``int D P_t phi . h dmu = E0 <e^{tA} l, h>``,
    where ``E0`` is the invariant mean of the slope ``-scale sin`` or
    ``scale cos``. Returns ``(lhs, rhs_grad, rhs_correction)``.
    """
    c, s = gaussian.char_cos_sin(phi.ell, np.zeros(phi.n_modes), gaussian.ou_covariance(phi.n_modes))
    e0 = phi.scale * (-s if phi.phase_kind == COSINE else c)
    et_ell = gaussian.heat_semigroup(phi.ell, t)
    lhs = e0 * float(phi.ell @ h)
    grad = e0 * float(et_ell @ h)
    correction = e0 * float((et_ell - phi.ell) @ h)
    return lhs, grad, correction


@dataclass
class RatioScanResult:
    ratios: list
    max_ratio: float
    p: float
    delta: float
    h_label: str
    std_errors: list = field(default_factory=list)
    skipped: list = field(default_factory=list)

    def rows(self):
        return [(label, r, se) for (label, r), se in zip(self.ratios, self.std_errors)]


def ratio_for(phi, h, p, delta, states):
    """Empirical ratio and its delta-method batch-means error for one test function."""
    a = np.broadcast_to(phi.deriv(states, h), (states.shape[0],))
    b = np.abs(phi(states)) ** p
    A = float(np.mean(a))
    B = float(np.mean(b))
    norm_h = float(sobolev_norm(h, 1.0 + delta))
    if B == 0.0:
        return None, None
    lp = B ** (1.0 / p)
    ratio = abs(A) / (lp * norm_h)
    influence = (np.sign(A) * a - abs(A) / (p * B) * b) / (lp * norm_h)
    _, se = batch_means(influence)
    return ratio, se


def theorem1_ratio_scan(family, h, p, delta, ens, h_label="h"):
    """Ratio ``|int <D phi, h> dnu| / (||phi||_{L^p(nu)} |h|_{1+delta})`` for every member."""
    if not p > 1:
        raise DomainError(f"p must exceed 1, got {p}")
    if not delta > 0:
        raise DomainError(f"delta must be positive, got {delta}")
    h = as_field(h, ens.n_modes)
    if not sobolev_norm(h, 1.0 + delta) > 0:
        raise DomainError("|h|_{1+delta} must be positive")
    ratios, errors, skipped = [], [], []
    for i, phi in enumerate(family):
        label = phi.label or f"phi{i}"
        r, se = ratio_for(phi, h, p, delta, ens.states)
        if r is None:
            skipped.append(label)
            continue
        ratios.append((label, r))
        errors.append(se)
    max_ratio = max((r for _, r in ratios), default=0.0)
    return RatioScanResult(ratios, max_ratio, p, delta, h_label, errors, skipped)


def gaussian_ratio(phi, h, p, delta, quad_limit=400):
    """Closed-form ratio under the heat invariant Gaussian.

    The numerator is exact; ``||phi||_{L^p}`` is exact for ``p = 2`` and by
    adaptive quadrature in the one-dimensional variable ``<l, X>``
    otherwise.
    """
    c, s = gaussian.char_cos_sin(phi.ell, np.zeros(phi.n_modes), gaussian.ou_covariance(phi.n_modes))
    slope_mean = -s if phi.phase_kind == COSINE else c
    numerator = abs(phi.scale * slope_mean * float(phi.ell @ h))
    if p == 2:
        lp = math.sqrt(gaussian.invariant_second_moment(phi))
    else:
        sd = math.sqrt(float(np.sum(gaussian.ou_covariance(phi.n_modes) * phi.ell**2)))
        trig = math.cos if phi.phase_kind == COSINE else math.sin
        if sd == 0.0:
            lp = abs(phi.scale * trig(0.0))
        else:
            # |trig|^p has kinks at its zeros, so adaptive quadrature beats Gauss-Hermite
            def integrand(z):
                return abs(phi.scale * trig(sd * z)) ** p * math.exp(-0.5 * z * z)

            mass = integrate.quad(integrand, -12.0, 12.0, limit=quad_limit, epsabs=1e-15)[0]
            lp = (mass / math.sqrt(2 * math.pi)) ** (1.0 / p)
    return numerator / (lp * float(sobolev_norm(h, 1.0 + delta)))


def pointwise_bound_scan(phi, xs, h, ts, cfg, m, seed, delta=0.1):
    """Diagnostic table of ``|P_t(D phi . h)(x)|`` against two candidate weights.

    Columns ``ratio_l4`` use ``(1 + t^{-1/2})(1 + |x|_{L4})^8 ||phi||_0 |h|_{1+delta}``;
    ``ratio_l6`` use ``(1 + t^{-1/2})(1 + |x|_{L6}^3) ||phi||_0 |h|_{1+delta}``.
    No pass/fail is attached.
    """
    from .semigroup import estimate_pt

    h = as_field(h, cfg.n_modes)
    sup = abs(phi.scale)
    norm_h = float(sobolev_norm(h, 1.0 + delta))
    rows = []
    for xi, x in enumerate(xs):
        x = as_field(x, cfg.n_modes)
        l4 = float(lp_norm(x, 4))
        l6 = float(lp_norm(x, 6))

        def integrand(y, phi=phi):
            return phi.deriv(y, h)

        for t in ts:
            est = estimate_pt(integrand, x, t, m, cfg, rng.derive_seed(seed, "pointwise", xi))
            value = abs(est.mean)
            base = (1.0 + t ** -0.5) * sup * norm_h
            w4 = base * (1.0 + l4) ** 8
            w6 = base * (1.0 + l6**3)
            rows.append({
                "x_index": xi,
                "t": float(t),
                "value": value,
                "std_error": est.std_error,
                "ratio_l4": value / w4 if w4 > 0 else 0.0,
                "ratio_l6": value / w6 if w6 > 0 else 0.0,
            })
    return rows
