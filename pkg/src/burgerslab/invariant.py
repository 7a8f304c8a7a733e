"""Ensembles from the invariant measure by long-run simulation.

Chains start at ``x0 = 0``, discard a burn-in and then keep one state every
``gap`` time units. Ensembles are stored chain-major, time-minor, so batch
means over consecutive states see the within-chain serial correlation.
"""

import csv
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import stats

from . import rng
from .dynamics import IntegratorConfig, run_paths
from .semigroup import MonteCarloEstimate, simulate_endpoints
from .spectral import DomainError, eigenvalue

BATCH_SIZE = 20
KS_CRITICAL_05 = 1.3581  # asymptotic two-sample constant at the 5% level


def relaxation_time(n_modes=None):
    """Variance relaxation time ``1/(2 alpha_1)`` of the slowest mode."""
    return 1.0 / (2.0 * eigenvalue(1))


def default_burn_in(dynamics):
    base = 10.0 * relaxation_time()
    return 5.0 * base if dynamics == "burgers" else base


def default_gap():
    return relaxation_time()


@dataclass
class StateEnsemble:
    states: np.ndarray
    burn_in: float
    gap: float
    seed: int
    dynamics_tag: str
    chain_ids: np.ndarray = field(repr=False, default=None)
    times: np.ndarray = field(repr=False, default=None)
    restarts: int = 0
    config: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self.states = np.asarray(self.states, dtype=np.float64)
        if self.states.ndim != 2 or self.states.shape[0] == 0:
            raise DomainError("an ensemble needs a non-empty (count, N) array of states")
        if not self.gap > 0:
            raise DomainError(f"gap must be positive, got {self.gap}")
        if self.dynamics_tag not in ("burgers", "heat"):
            raise DomainError(f"dynamics_tag must be 'burgers' or 'heat', got {self.dynamics_tag!r}")
        if self.chain_ids is None:
            self.chain_ids = np.zeros(len(self.states), dtype=np.int64)
        if self.times is None:
            self.times = self.burn_in + self.gap * (1 + np.arange(len(self.states)))

    def __len__(self):
        return self.states.shape[0]

    @property
    def n_modes(self):
        return self.states.shape[1]

    def subset(self, index):
        return StateEnsemble(self.states[index], self.burn_in, self.gap, self.seed,
                             self.dynamics_tag, self.chain_ids[index], self.times[index],
                             self.restarts, self.config)


def sample_invariant(cfg, burn_in=None, gap=None, count=1000, chains=100, seed=None):
    """Collect ``count`` approximately invariant states from ``chains`` chains.

    A chain that blows up is restarted from 0 on a fresh stream; the number
    of restarts is recorded on the ensemble.
    """
    if burn_in is None:
        burn_in = default_burn_in(cfg.dynamics)
    if gap is None:
        gap = default_gap()
    if burn_in < 0 or count < 1 or chains < 1:
        raise DomainError("need burn_in >= 0, count >= 1, chains >= 1")
    seed = cfg.seed if seed is None else seed
    chains = min(chains, count)
    per_chain = math.ceil(count / chains)
    n_gap = max(1, round(gap / cfg.dt))
    dt = gap / n_gap
    n_burn = round(burn_in / dt)
    n_steps = n_burn + n_gap * per_chain
    states = np.zeros((chains, per_chain, cfg.n_modes))
    pending = np.arange(chains)
    restarts = 0
    attempt = 0
    while pending.size:
        if attempt == 0:
            keys = rng.stream_keys(seed, chains)[pending]
        else:
            keys = rng.stream_keys(rng.derive_seed(seed, "restart", attempt), chains)[pending]
        batch = run_paths(np.zeros(cfg.n_modes), cfg, n_steps, dt, keys,
                          record=(n_burn + n_gap, n_gap, per_chain), track=False)
        ok = batch.ok
        states[pending[ok]] = batch.rec_x[ok]
        restarts += int(np.count_nonzero(~ok))
        pending = pending[~ok]
        attempt += 1
        if attempt > 100:
            raise RuntimeError("chains keep blowing up; reduce dt or the noise level")
    chain_ids = np.repeat(np.arange(chains), per_chain)[:count]
    times = np.tile(n_burn * dt + n_gap * dt * (1 + np.arange(per_chain)), chains)[:count]
    return StateEnsemble(
        states=states.reshape(-1, cfg.n_modes)[:count],
        burn_in=n_burn * dt,
        gap=n_gap * dt,
        seed=seed,
        dynamics_tag=cfg.dynamics,
        chain_ids=chain_ids,
        times=times,
        restarts=restarts,
        config=asdict(cfg),
    )


def batch_means(values, batch=BATCH_SIZE):
    """Mean and batch-means standard error of a serially correlated series."""
    values = np.asarray(values, dtype=np.float64)
    n = values.size
    mean = float(np.mean(values))
    n_batches = n // batch
    if n_batches < 2:
        se = float(np.std(values, ddof=1) / math.sqrt(n)) if n > 1 else 0.0
        return mean, se
    means = values[: n_batches * batch].reshape(n_batches, batch).mean(axis=1)
    se = float(np.std(means, ddof=1) / math.sqrt(n_batches))
    if not np.any(values - values[0]):
        se = 0.0
    return mean, se


def ensemble_estimate(values, n_failed=0, batch=BATCH_SIZE):
    values = np.asarray(values, dtype=np.float64)
    mean, se = batch_means(values, batch)
    return MonteCarloEstimate(mean, se, values.size, n_failed, values)


def estimate_moment(ens, f, batch=BATCH_SIZE):
    """Ensemble average of ``f`` with batch-means standard error."""
    values = np.broadcast_to(np.asarray(f(ens.states), dtype=np.float64), (len(ens),))
    return ensemble_estimate(values, batch=batch)


@dataclass
class StationarityReport:
    ks_stat: float
    critical_value: float
    n_eff: tuple
    passed: bool


def _effective_size(series):
    """AR(1) effective sample size summed over chains (rows of ``series``)."""
    series = np.atleast_2d(series)
    centred = series - series.mean(axis=1, keepdims=True)
    if series.shape[1] < 2:
        return float(series.size)
    num = np.sum(centred[:, 1:] * centred[:, :-1])
    den = np.sum(centred * centred)
    rho = float(num / den) if den > 0 else 0.0
    rho = min(max(rho, 0.0), 0.99)
    return series.size * (1.0 - rho) / (1.0 + rho)


def ks_window_test(sample_a, sample_b, n_eff_a=None, n_eff_b=None):
    """Two-sample KS statistic against the 5% critical value at effective sizes."""
    sample_a = np.ravel(sample_a)
    sample_b = np.ravel(sample_b)
    n_a = sample_a.size if n_eff_a is None else n_eff_a
    n_b = sample_b.size if n_eff_b is None else n_eff_b
    ks = float(stats.ks_2samp(sample_a, sample_b).statistic)
    crit = KS_CRITICAL_05 * math.sqrt((n_a + n_b) / (n_a * n_b))
    return StationarityReport(ks, crit, (float(n_a), float(n_b)), ks < crit)


def stationarity_diagnostic(cfg, window, statistic, chains=200, per_window=50, seed=None):
    """KS comparison of ``statistic`` sampled on ``[T, 2T]`` and ``[2T, 3T]``.

    ``chains`` cold-started chains each contribute ``per_window`` equally
    spaced samples to both windows; the critical value uses AR(1)
    effective sample sizes.
    """
    if not window > 0:
        raise DomainError(f"window must be positive, got {window}")
    seed = cfg.seed if seed is None else seed
    spacing = window / per_window
    n_gap = max(1, round(spacing / cfg.dt))
    dt = spacing / n_gap
    start = n_gap * per_window
    n_steps = 3 * start
    keys = rng.stream_keys(seed, chains)
    batch = run_paths(np.zeros(cfg.n_modes), cfg, n_steps, dt, keys,
                      record=(start + n_gap, n_gap, 2 * per_window), track=False)
    rec = batch.rec_x[batch.ok]
    values = np.asarray(statistic(rec.reshape(-1, cfg.n_modes))).reshape(rec.shape[0], -1)
    first, second = values[:, :per_window], values[:, per_window:]
    return ks_window_test(first, second, _effective_size(first), _effective_size(second))


@dataclass
class InvarianceReport:
    ensemble_mean: MonteCarloEstimate
    evolved_mean: MonteCarloEstimate
    discrepancy: float
    combined_error: float

    @property
    def passed(self):
        return self.discrepancy <= 3.0 * self.combined_error


def invariance_check(ens, phi, t, m, cfg, seed, max_states=None):
    """Compare ``int phi dnu`` with ``int P_t phi dnu`` on the same ensemble states.

    Each state ``x_j`` is paired with ``m`` paths estimating ``P_t phi(x_j)``;
    the per-state differences carry the batch-means error.
    """
    sub = ens if max_states is None else ens.subset(slice(0, max_states))
    direct = phi(sub.states)
    if t == 0:
        est = ensemble_estimate(direct)
        return InvarianceReport(est, est, 0.0, 0.0)
    if not t > 0:
        raise DomainError(f"t must be >= 0, got {t}")
    starts = np.repeat(sub.states, m, axis=0)
    batch = simulate_endpoints(starts, t, starts.shape[0], cfg, seed, track=False)
    vals = phi(batch.x).reshape(len(sub), m)
    okm = batch.ok.reshape(len(sub), m)
    keep = okm.all(axis=1)
    evolved = vals[keep].mean(axis=1)
    diff = direct[keep] - evolved
    d_mean, d_se = batch_means(diff)
    return InvarianceReport(ensemble_estimate(direct[keep]),
                            ensemble_estimate(evolved, batch.n_failed),
                            abs(d_mean), d_se)


def save_ensemble(ens, csv_path, meta_path):
    """Write ``chain,t,mode,coeff`` rows plus a JSON metadata sidecar."""
    from .reporting import dump_json, fmt

    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["chain", "t", "mode", "coeff"])
        for j in range(len(ens)):
            for k in range(ens.n_modes):
                writer.writerow([int(ens.chain_ids[j]), fmt(ens.times[j]), k + 1,
                                 repr(float(ens.states[j, k]))])
    meta = {
        "burn_in": ens.burn_in,
        "gap": ens.gap,
        "seed": int(ens.seed),
        "dynamics_tag": ens.dynamics_tag,
        "restarts": ens.restarts,
        "count": len(ens),
        "n_modes": ens.n_modes,
        "config": ens.config,
    }
    dump_json(meta, meta_path)


def load_ensemble(csv_path, meta_path):
    with open(meta_path) as fh:
        meta = json.load(fh)
    n = meta["n_modes"]
    states = np.zeros((meta["count"], n))
    chains = np.zeros(meta["count"], dtype=np.int64)
    times = np.zeros(meta["count"])
    with open(csv_path, newline="") as fh:
        reader = csv.DictReader(fh)
        for row_index, row in enumerate(reader):
            j, k = divmod(row_index, n)
            states[j, int(row["mode"]) - 1] = float(row["coeff"])
            chains[j] = int(row["chain"])
            times[j] = float(row["t"])
    return StateEnsemble(states, meta["burn_in"], meta["gap"], meta["seed"],
                         meta["dynamics_tag"], chains, times, meta["restarts"],
                         meta.get("config", {}))


def config_from_ensemble(ens):
    return IntegratorConfig(**ens.config) if ens.config else None
