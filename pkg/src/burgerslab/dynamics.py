"""Galerkin-truncated stochastic Burgers dynamics and its tangent flow.

The state obeys ``dX = (A X + b(X)) dt + dW`` with cylindrical noise; each
retained mode gets an independent Brownian motion. Time stepping is
exponential Euler with the stochastic convolution drawn exactly:

    X_{n+1,k} = e^{-a_k dt} X_{n,k} + phi1(-a_k dt) dt b(X_n)_k + gamma_k xi_{n,k}

with ``gamma_k^2 = (1 - e^{-2 a_k dt}) / (2 a_k)``. The tangent process is the
exact derivative of this map, so finite differences on common noise reproduce
it to O(eps^2).
"""

import csv
import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import kernels, rng
from .kernels import ACC_CUBE, ACC_CUBE_MOMENT, ACC_FK, ACC_ITO, ACC_L483, N_ACC
from .spectral import (
    BLOWUP_LIMIT,
    DomainError,
    as_field,
    default_grid_points,
    eigenvalues,
    sobolev_norm,
    spectral_grid,
)


class IntegrationError(RuntimeError):
    """A path left the admissible range (blow-up); ``time`` is when."""

    def __init__(self, message, time):
        super().__init__(f"{message} at t={time:.6g}")
        self.time = time


@dataclass(frozen=True)
class IntegratorConfig:
    """Parameters of one simulation setting.

    ``nonlinear=False`` drops the Burgers term (heat / Ornstein-Uhlenbeck
    dynamics); ``noise=False`` runs the deterministic flow.
    """

    n_modes: int
    dt: float = 1e-3
    t_final: float = 1.0
    k_fk: float = 0.0
    c_lemma31: float = 1.0
    seed: int = 0
    grid_points: int | None = None
    nonlinear: bool = True
    noise: bool = True

    def __post_init__(self):
        if self.n_modes < 1:
            raise DomainError(f"n_modes must be >= 1, got {self.n_modes}")
        if not self.dt > 0:
            raise DomainError(f"dt must be positive, got {self.dt}")
        if self.t_final < 0:
            raise DomainError(f"t_final must be >= 0, got {self.t_final}")
        if self.t_final > 0 and self.dt > self.t_final:
            raise DomainError(f"dt={self.dt} exceeds t_final={self.t_final}")
        if self.k_fk < 0:
            raise DomainError(f"k_fk must be >= 0, got {self.k_fk}")
        if not self.c_lemma31 > 0:
            raise DomainError(f"c_lemma31 must be positive, got {self.c_lemma31}")
        if self.grid_points is not None and self.grid_points < 2 * self.n_modes:
            raise DomainError(f"grid_points must be >= 2*n_modes, got {self.grid_points}")

    @property
    def m_points(self):
        return self.grid_points or default_grid_points(self.n_modes)

    @property
    def dynamics(self):
        return "burgers" if self.nonlinear else "heat"

    def with_(self, **changes):
        return replace(self, **changes)


def step_count(t, dt_max):
    """Number of equal steps covering ``[0, t]`` with step at most ``dt_max``."""
    if t < 0:
        raise DomainError(f"time must be >= 0, got {t}")
    if t == 0:
        return 0, 0.0
    n = max(1, math.ceil(t / dt_max - 1e-9))
    return n, t / n


@dataclass(frozen=True)
class StepCoefficients:
    decay: np.ndarray
    drift: np.ndarray
    noise_std: np.ndarray
    bel_weight: np.ndarray

    @classmethod
    def build(cls, n_modes, dt, noise=True):
        alpha = eigenvalues(n_modes)
        decay = np.exp(-alpha * dt)
        drift = -np.expm1(-alpha * dt) / alpha
        if noise:
            noise_std = np.sqrt(-np.expm1(-2.0 * alpha * dt) / (2.0 * alpha))
            bel_weight = dt / noise_std
        else:
            noise_std = np.zeros(n_modes)
            bel_weight = np.zeros(n_modes)
        return cls(decay, drift, noise_std, bel_weight)


@dataclass
class PathBatch:
    """Terminal state of a batch of paths plus optional recorded snapshots."""

    x: np.ndarray
    eta: np.ndarray | None
    acc: np.ndarray
    failed: np.ndarray
    fail_time: np.ndarray
    rec_x: np.ndarray | None = None
    rec_eta: np.ndarray | None = None
    rec_acc: np.ndarray | None = None

    @property
    def n_failed(self):
        return int(np.count_nonzero(self.failed))

    @property
    def ok(self):
        return ~self.failed


def run_paths(x0, cfg, n_steps, dt, keys, h=None, step0=0, t0=0.0, acc=None,
              record=None, track=True, failed=None):
    """Advance ``len(keys)`` paths by ``n_steps`` steps of size ``dt``.

    Parameters
    ----------
    x0 : (N,) or (m, N) array
        Initial states; a single state is broadcast to all paths.
    h : (N,) or (m, N) array, optional
        Initial tangent direction; omit to skip the tangent process.
    step0, t0 : int, float
        Noise-counter and clock offsets, so a path can be continued in
        several segments without reusing noise.
    record : (start, every, count), optional
        Snapshot steps ``start, start+every, ...`` (``count`` of them).
    track : bool
        Accumulate path functionals. Heat runs without tracking skip all
        grid work.
    """
    keys = np.asarray(keys, dtype=np.uint64)
    m = keys.shape[0]
    n = cfg.n_modes
    x = np.array(np.broadcast_to(as_field(x0, n), (m, n)), dtype=np.float64)
    with_tangent = h is not None
    if with_tangent:
        eta = np.array(np.broadcast_to(as_field(h, n), (m, n)), dtype=np.float64)
    else:
        eta = np.zeros((m, n))
    acc = np.zeros((m, N_ACC)) if acc is None else np.array(acc, dtype=np.float64)
    failed = np.zeros(m, dtype=bool) if failed is None else np.array(failed, dtype=bool)
    fail_time = np.full(m, np.nan)
    coef = StepCoefficients.build(n, dt if dt > 0 else 1.0, cfg.noise)
    grid = spectral_grid(n, cfg.m_points)
    if record is None:
        rec_start, rec_every, n_rec = 0, 0, 0
    else:
        rec_start, rec_every, n_rec = record
    rec_x = np.zeros((m, n_rec, n))
    rec_eta = np.zeros((m, n_rec, n)) if with_tangent else np.zeros((m, 0, n))
    rec_acc = np.zeros((m, n_rec, N_ACC))
    with_grid = bool(cfg.nonlinear or track)
    kernels.propagate(
        x, eta, keys, int(step0), int(n_steps), float(dt), float(t0),
        coef.decay, coef.drift, coef.noise_std, coef.bel_weight,
        np.ascontiguousarray(grid.synth), np.ascontiguousarray(grid.deriv), grid.weight,
        bool(cfg.nonlinear), bool(cfg.noise), with_tangent, with_grid,
        acc, failed, fail_time,
        int(rec_start), int(rec_every), rec_x, rec_eta, rec_acc,
    )
    return PathBatch(
        x=x,
        eta=eta if with_tangent else None,
        acc=acc,
        failed=failed,
        fail_time=fail_time,
        rec_x=rec_x if n_rec else None,
        rec_eta=rec_eta if (n_rec and with_tangent) else None,
        rec_acc=rec_acc if n_rec else None,
    )


def sample_noise_increment(n_modes, dt, stream):
    """Brownian increment ``sqrt(dt) * xi`` for one step of ``stream``."""
    if dt < 0:
        raise DomainError(f"dt must be >= 0, got {dt}")
    xi = stream.normals(n_modes)
    return math.sqrt(dt) * xi


def step_state(x, dw, cfg):
    """One exponential Euler step driven by the Brownian increment ``dw``."""
    x = as_field(x, cfg.n_modes)
    coef = StepCoefficients.build(cfg.n_modes, cfg.dt, cfg.noise)
    xn = coef.decay * x
    if cfg.nonlinear:
        grid = spectral_grid(cfg.n_modes, cfg.m_points)
        u = grid.to_grid(x)
        xn = xn + coef.drift * grid.derivative_projection(u * u)
    if cfg.noise:
        xn = xn + coef.noise_std / math.sqrt(cfg.dt) * np.asarray(dw)
    if not np.all(np.abs(xn) <= BLOWUP_LIMIT):
        raise IntegrationError("state left the admissible range", cfg.dt)
    return xn


def step_tangent(eta, x, cfg):
    """One step of the tangent flow along the state ``x`` (frozen Jacobian)."""
    eta = as_field(eta, cfg.n_modes)
    coef = StepCoefficients.build(cfg.n_modes, cfg.dt, cfg.noise)
    en = coef.decay * eta
    if cfg.nonlinear:
        grid = spectral_grid(cfg.n_modes, cfg.m_points)
        en = en + coef.drift * grid.derivative_projection(
            2.0 * grid.to_grid(x) * grid.to_grid(eta))
    if not np.all(np.abs(en) <= BLOWUP_LIMIT):
        raise IntegrationError("tangent left the admissible range", cfg.dt)
    return en


@dataclass
class TrajectoryRecord:
    """One simulated path with running values of the path functionals."""

    times: np.ndarray
    states: np.ndarray
    tangent: np.ndarray | None
    fk_integral: np.ndarray
    l4_83_integral: np.ndarray
    ito_integral: np.ndarray
    cube_pairing_integral: np.ndarray
    cube_pairing_moment: np.ndarray = field(repr=False)

    @property
    def final_state(self):
        return self.states[-1]


def simulate_trajectory(x0, h, cfg, stream_index=0):
    """Simulate one path to ``cfg.t_final`` recording every step.

    The path uses stream ``stream_index`` of master seed ``cfg.seed``, the
    same stream an estimator assigns to its sample ``stream_index``.
    """
    x0 = as_field(x0, cfg.n_modes)
    n_steps, dt = step_count(cfg.t_final, cfg.dt)
    keys = rng.stream_keys(cfg.seed, 1, offset=stream_index)
    batch = run_paths(x0, cfg, n_steps, dt, keys, h=h, record=(0, 1, n_steps + 1))
    if batch.failed[0]:
        raise IntegrationError("trajectory blew up", float(batch.fail_time[0]))
    acc = batch.rec_acc[0]
    return TrajectoryRecord(
        times=np.arange(n_steps + 1) * dt,
        states=batch.rec_x[0],
        tangent=None if h is None else batch.rec_eta[0],
        fk_integral=acc[:, ACC_FK],
        l4_83_integral=acc[:, ACC_L483],
        ito_integral=acc[:, ACC_ITO],
        cube_pairing_integral=acc[:, ACC_CUBE],
        cube_pairing_moment=acc[:, ACC_CUBE_MOMENT],
    )


def write_trajectory_csv(record, path):
    """Dump ``t,mode,coeff,tangent_coeff,fk_integral``, one row per (time, mode)."""
    from .reporting import fmt

    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["t", "mode", "coeff", "tangent_coeff", "fk_integral"])
        for i, t in enumerate(record.times):
            for k in range(record.states.shape[1]):
                tan = "" if record.tangent is None else fmt(record.tangent[i, k])
                writer.writerow([fmt(t), k + 1, fmt(record.states[i, k]), tan,
                                 fmt(record.fk_integral[i])])


@dataclass
class TangentEnergyReport:
    worst_margin: float
    holds: bool
    c: float
    alpha: float


def _energy_margins(times, l483, eta_alpha_sq, eta_one_sq, h_alpha_sq, c):
    """Margins LHS(t) - |h|_alpha^2 on the recorded time grid (any leading batch axes)."""
    decay_all = np.exp(-c * l483)
    first = decay_all * eta_alpha_sq
    integral = np.zeros_like(eta_one_sq)
    dts = np.diff(times)
    for i in range(1, len(times)):
        fade = np.exp(-c * (l483[..., i] - l483[..., i - 1]))
        half = 0.5 * dts[i - 1]
        integral[..., i] = fade * (integral[..., i - 1] + half * eta_one_sq[..., i - 1]) \
            + half * eta_one_sq[..., i]
    return first + integral - h_alpha_sq[..., None]


def check_lemma31(record, h, alpha, c, tol=1e-9):
    """Worst margin of the tangent energy inequality along ``record``.

    Evaluates, at every stored time ``t``,

        e^{-c G(0,t)} |eta(t)|_alpha^2
        + int_0^t e^{-c G(s,t)} |eta(s)|_{1+alpha}^2 ds - |h|_alpha^2

    with ``G(s,t) = int_s^t |X|_{L4}^{8/3}``; the inequality holds when the
    maximum is at most ``tol``.
    """
    if record.tangent is None:
        raise ValueError("check_lemma31 needs a record with a tangent process")
    if not -1.0 <= alpha <= 0.0:
        raise DomainError(f"alpha must lie in [-1, 0], got {alpha}")
    margins = _energy_margins(
        record.times,
        record.l4_83_integral,
        sobolev_norm(record.tangent, alpha) ** 2,
        sobolev_norm(record.tangent, 1.0 + alpha) ** 2,
        np.asarray(sobolev_norm(h, alpha) ** 2),
        c,
    )
    worst = float(np.max(margins))
    return TangentEnergyReport(worst_margin=worst, holds=worst <= tol, c=c, alpha=alpha)


def tangent_energy_ensemble(x0, h, cfg, n_paths, seed):
    """Record ``n_paths`` state+tangent paths for calibrating the constant ``c``."""
    n_steps, dt = step_count(cfg.t_final, cfg.dt)
    keys = rng.stream_keys(seed, n_paths)
    batch = run_paths(x0, cfg, n_steps, dt, keys, h=h, record=(0, 1, n_steps + 1))
    ok = batch.ok
    times = np.arange(n_steps + 1) * dt
    return times, batch.rec_x[ok], batch.rec_eta[ok], batch.rec_acc[ok, :, ACC_L483], batch.n_failed


def tangent_energy_worst(times, tangents, l483, h, alpha, c):
    margins = _energy_margins(
        times, l483,
        sobolev_norm(tangents, alpha) ** 2,
        sobolev_norm(tangents, 1.0 + alpha) ** 2,
        np.full(tangents.shape[0], sobolev_norm(h, alpha) ** 2),
        c,
    )
    return float(np.max(margins))


def fit_energy_constant(times, tangents, l483, h, alpha, tol=1e-9, c_max=1e6):
    """Smallest ``c`` (2 significant figures, rounded up) making the inequality hold.

    Every term of the left-hand side is non-increasing in ``c``, so the set
    of admissible constants is an interval and bisection applies.
    """
    if tangent_energy_worst(times, tangents, l483, h, alpha, 0.0) <= tol:
        return 0.0
    hi = 1.0
    while tangent_energy_worst(times, tangents, l483, h, alpha, hi) > tol:
        hi *= 2.0
        if hi > c_max:
            raise RuntimeError("no admissible constant below c_max")
    lo = 0.0
    while hi - lo > 1e-3 * hi:
        mid = 0.5 * (lo + hi)
        if tangent_energy_worst(times, tangents, l483, h, alpha, mid) <= tol:
            hi = mid
        else:
            lo = mid
    exponent = math.floor(math.log10(hi)) - 1
    return math.ceil(hi / 10.0**exponent) * 10.0**exponent
