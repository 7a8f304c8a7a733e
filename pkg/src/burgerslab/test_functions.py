"""Cylindrical test functions ``scale * cos<l, x>`` and ``scale * sin<l, x>``.

These span the core on which the generator acts in closed form, and their
calculus is exact: gradient, Hessian trace and generator need no
discretization beyond the Galerkin truncation of ``b``.
"""

from dataclasses import dataclass

import numpy as np

from .spectral import DomainError, apply_laplacian, as_field, burgers_b, sparse_field

COSINE = "cosine"
SINE = "sine"
_KINDS = (COSINE, SINE)
_KIND_ALIASES = {"cos": COSINE, "cosine": COSINE, "sin": SINE, "sine": SINE}

# The generator's second-order term uses the noise covariance, the identity
# for cylindrical noise. The OU invariant covariance -A^{-1}/2 is a different
# object and lives in ``gaussian.ou_covariance``.
NOISE_COVARIANCE_SCALE = 1.0


@dataclass(frozen=True)
class CylindricalFunction:
    ell: np.ndarray
    phase_kind: str = COSINE
    scale: float = 1.0
    label: str = ""

    def __post_init__(self):
        if self.phase_kind not in _KINDS:
            raise DomainError(f"phase_kind must be one of {_KINDS}, got {self.phase_kind!r}")
        ell = as_field(self.ell)
        if ell.ndim != 1:
            raise DomainError("ell must be a single field")
        object.__setattr__(self, "ell", ell)

    @property
    def n_modes(self):
        return self.ell.shape[0]

    def _phase(self, x):
        x = np.asarray(x, dtype=np.float64)
        if x.shape[-1] != self.n_modes:
            raise DomainError(f"expected {self.n_modes} modes, got {x.shape[-1]}")
        return x @ self.ell

    def __call__(self, x):
        return self.value(x)

    def value(self, x):
        theta = self._phase(x)
        if self.phase_kind == COSINE:
            return self.scale * np.cos(theta)
        return self.scale * np.sin(theta)

    def _slope(self, theta):
        if self.phase_kind == COSINE:
            return -self.scale * np.sin(theta)
        return self.scale * np.cos(theta)

    def grad(self, x):
        return np.multiply.outer(self._slope(self._phase(x)), self.ell)

    def deriv(self, x, h):
        return self._slope(self._phase(x)) * np.sum(np.asarray(h) * self.ell, axis=-1)

    def hessian_trace(self, x):
        return -float(self.ell @ self.ell) * self.value(x)

    def resized(self, n_modes):
        """Same function viewed in a truncation with ``n_modes`` modes."""
        ell = np.zeros(n_modes)
        k = min(n_modes, self.n_modes)
        if np.any(self.ell[k:] != 0):
            raise DomainError(f"ell has support beyond mode {n_modes}")
        ell[:k] = self.ell[:k]
        return CylindricalFunction(ell, self.phase_kind, self.scale, self.label)


def evaluate(phi, x):
    return phi.value(x)


def gradient(phi, x):
    return phi.grad(x)


def directional_derivative(phi, x, h):
    """``<D phi(x), h>``; ``h`` may be one field or one per state."""
    return phi.deriv(x, h)


def generator_apply(phi, x, m_points=None):
    """``L phi(x) = 1/2 Tr[D^2 phi(x)] + <A x + b(x), D phi(x)>``.

    For a cylindrical function the trace term is exactly
    ``-1/2 |l|^2 phi(x)``, independent of the truncation level.
    """
    x = as_field(x, phi.n_modes)
    trace_term = 0.5 * NOISE_COVARIANCE_SCALE * phi.hessian_trace(x)
    drift = apply_laplacian(x) + burgers_b(x, m_points)
    return trace_term + phi.deriv(x, drift)


@dataclass(frozen=True)
class LinearFunctional:
    """Unbounded test function ``x -> scale <l, x>``; used by the OU oracles."""

    ell: np.ndarray
    scale: float = 1.0
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "ell", as_field(self.ell))

    @property
    def n_modes(self):
        return self.ell.shape[0]

    def __call__(self, x):
        return self.value(x)

    def value(self, x):
        return self.scale * (np.asarray(x) @ self.ell)

    def grad(self, x):
        x = np.asarray(x)
        return np.broadcast_to(self.scale * self.ell, x.shape).copy()

    def deriv(self, x, h):
        x = np.asarray(x)
        out = self.scale * np.sum(np.asarray(h) * self.ell, axis=-1)
        return np.broadcast_to(out, x.shape[:-1]).astype(np.float64)

    def hessian_trace(self, x):
        return np.zeros(np.asarray(x).shape[:-1])


@dataclass(frozen=True)
class TestFamily:
    members: tuple
    description: str = ""

    __test__ = False

    def __post_init__(self):
        if not self.members:
            raise DomainError("a test family needs at least one member")
        object.__setattr__(self, "members", tuple(self.members))

    def __iter__(self):
        return iter(self.members)

    def __len__(self):
        return len(self.members)

    def resized(self, n_modes):
        return TestFamily(tuple(m.resized(n_modes) for m in self.members), self.description)


def parse_member(spec, n_modes, label=""):
    """Parse ``"<kind> <scale> <mode>:<value>,<mode>:<value>"``.

    An empty mode list (``"cos 1"``) gives ``l = 0``, the constant function.
    """
    parts = spec.split()
    if len(parts) not in (2, 3):
        raise ValueError(f"cylindrical spec needs '<kind> <scale> [modes]', got {spec!r}")
    kind = _KIND_ALIASES.get(parts[0].lower())
    if kind is None:
        raise ValueError(f"unknown kind {parts[0]!r}; use cos or sin")
    scale = float(parts[1])
    modes = {}
    if len(parts) == 3:
        for item in parts[2].split(","):
            k, _, value = item.partition(":")
            if not value:
                raise ValueError(f"mode entry must be '<mode>:<value>', got {item!r}")
            modes[int(k)] = float(value)
    return CylindricalFunction(sparse_field(modes, n_modes), kind, scale, label)


def format_member(phi):
    kind = "cos" if phi.phase_kind == COSINE else "sin"
    modes = ",".join(f"{k + 1}:{float(v)!r}" for k, v in enumerate(phi.ell) if v != 0)
    return f"{kind} {float(phi.scale)!r} {modes}".rstrip()


def random_family(count, n_modes, seed, max_support=3, support_modes=4, max_freq=2.0):
    """Seeded family of cylindrical functions supported on at most ``max_support`` modes."""
    gen = np.random.default_rng(seed)
    members = []
    top = min(support_modes, n_modes)
    for i in range(count):
        size = int(gen.integers(1, min(max_support, top) + 1))
        modes = gen.choice(np.arange(1, top + 1), size=size, replace=False)
        values = gen.uniform(-max_freq, max_freq, size=size)
        kind = COSINE if gen.random() < 0.5 else SINE
        ell = sparse_field(dict(zip(modes.tolist(), values.tolist())), n_modes)
        members.append(CylindricalFunction(ell, kind, 1.0, f"phi{i:02d}"))
    return TestFamily(tuple(members), f"random cylindrical family (seed={seed})")
