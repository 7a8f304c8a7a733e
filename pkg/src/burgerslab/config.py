"""Experiment configuration in flat ``key = value`` text with dotted sections.

Example::

    dynamics = burgers
    master_seed = 7
    integrator.n_modes = 16
    estimator.m_samples = 20000
    ensemble.burn_in = auto
    test_family.a = cos 1 1:1.0
    test_family.b = sin 0.5 1:2.0,3:-1.0

Parsing is strict: unknown keys, duplicate keys and malformed values are
errors that carry the offending line number.
"""

from dataclasses import dataclass, field, fields, replace

from .dynamics import IntegratorConfig
from .spectral import DomainError, sparse_field
from .test_functions import TestFamily, parse_member


class ConfigError(ValueError):
    def __init__(self, message, line=None):
        self.line = line
        super().__init__(message if line is None else f"line {line}: {message}")


@dataclass(frozen=True)
class IntegratorSection:
    n_modes: int = 8
    dt: float = 1e-3
    t_final: float = 1.0
    k_fk: float = 0.0
    c_lemma31: float = 1.0
    grid_points: int | None = None
    noise: bool = True


@dataclass(frozen=True)
class EstimatorSection:
    m_samples: int = 10000
    s_nodes: int = 16
    p: float = 2.0
    delta: float = 0.1


@dataclass(frozen=True)
class EnsembleSection:
    burn_in: float | None = None
    gap: float | None = None
    count: int = 2000
    chains: int = 100


@dataclass(frozen=True)
class ExperimentSection:
    """Inputs of the single-point estimators and verifiers."""

    x0: str = "1:1.0"
    h: str = "1:1.0"
    phi: str = "cos 1.0 1:1.0"
    t: float = 0.25
    alpha: float = 0.0


_SECTIONS = {
    "integrator": IntegratorSection,
    "estimator": EstimatorSection,
    "ensemble": EnsembleSection,
    "experiment": ExperimentSection,
}
_TOP = ("dynamics", "master_seed", "output_dir")
DEFAULT_SEED = 20261015


@dataclass(frozen=True)
class ExperimentConfig:
    dynamics: str = "burgers"
    master_seed: int = DEFAULT_SEED
    output_dir: str = "out"
    integrator: IntegratorSection = field(default_factory=IntegratorSection)
    estimator: EstimatorSection = field(default_factory=EstimatorSection)
    ensemble: EnsembleSection = field(default_factory=EnsembleSection)
    experiment: ExperimentSection = field(default_factory=ExperimentSection)
    test_family: tuple = ()

    def __post_init__(self):
        if self.dynamics not in ("burgers", "heat"):
            raise ConfigError(f"dynamics must be 'burgers' or 'heat', got {self.dynamics!r}")
        if not 0 <= self.master_seed < 2**64:
            raise ConfigError(f"master_seed must be a 64-bit unsigned integer, got {self.master_seed}")
        est, ens = self.estimator, self.ensemble
        if est.m_samples < 1 or est.s_nodes < 1:
            raise ConfigError("estimator.m_samples and estimator.s_nodes must be >= 1")
        if not est.p > 1:
            raise ConfigError(f"estimator.p must exceed 1, got {est.p}")
        if not est.delta > 0:
            raise ConfigError(f"estimator.delta must be positive, got {est.delta}")
        if ens.count < 1 or ens.chains < 1:
            raise ConfigError("ensemble.count and ensemble.chains must be >= 1")
        if ens.burn_in is not None and ens.burn_in < 0:
            raise ConfigError("ensemble.burn_in must be >= 0")
        if ens.gap is not None and not ens.gap > 0:
            raise ConfigError("ensemble.gap must be positive")
        try:
            self.integrator_config()
            self.family()
            self.parse_field(self.experiment.x0)
            self.parse_field(self.experiment.h)
            self.phi()
        except (DomainError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(str(exc)) from None

    @property
    def n_modes(self):
        return self.integrator.n_modes

    def integrator_config(self):
        i = self.integrator
        return IntegratorConfig(
            n_modes=i.n_modes, dt=i.dt, t_final=i.t_final, k_fk=i.k_fk,
            c_lemma31=i.c_lemma31, seed=self.master_seed, grid_points=i.grid_points,
            nonlinear=self.dynamics == "burgers", noise=i.noise,
        )

    def parse_field(self, text):
        return sparse_field(parse_sparse(text), self.n_modes)

    def phi(self):
        return parse_member(self.experiment.phi, self.n_modes, "phi")

    def family(self):
        if not self.test_family:
            return None
        members = [parse_member(spec, self.n_modes, label) for label, spec in self.test_family]
        return TestFamily(tuple(members), "configured family")

    def override(self, **changes):
        """Copy with top-level or dotted-key changes, e.g. ``override(**{"integrator.n_modes": 16})``."""
        top = {k: v for k, v in changes.items() if "." not in k}
        sections = {}
        for key, value in changes.items():
            if "." in key:
                section, name = key.split(".", 1)
                sections.setdefault(section, {})[name] = value
        for section, values in sections.items():
            top[section] = replace(getattr(self, section), **values)
        return replace(self, **top)

    def to_flat(self):
        """Ordered ``key -> text`` mapping; :func:`from_flat` inverts it exactly."""
        out = {k: _format_value(getattr(self, k)) for k in _TOP}
        for name in _SECTIONS:
            section = getattr(self, name)
            for f in fields(section):
                out[f"{name}.{f.name}"] = _format_value(getattr(section, f.name))
        for label, spec in self.test_family:
            out[f"test_family.{label}"] = spec
        return out

    def to_text(self):
        return "".join(f"{k} = {v}\n" for k, v in self.to_flat().items())


def parse_sparse(text):
    """``"1:1.0,3:-0.5"`` -> ``{1: 1.0, 3: -0.5}``; an empty string is the zero field."""
    text = text.strip()
    if not text or text == "0":
        return {}
    out = {}
    for item in text.split(","):
        k, sep, v = item.partition(":")
        if not sep:
            raise ValueError(f"expected '<mode>:<value>', got {item!r}")
        out[int(k)] = float(v)
    return out


def _format_value(value):
    if value is None:
        return "auto"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _convert(text, annotation):
    optional = "None" in str(annotation)
    if optional and text == "auto":
        return None
    kind = str(annotation)
    if "bool" in kind:
        if text.lower() in ("true", "yes", "1"):
            return True
        if text.lower() in ("false", "no", "0"):
            return False
        raise ValueError(f"expected a boolean, got {text!r}")
    if "int" in kind:
        return int(text)
    if "float" in kind:
        return float(text)
    return text


_TOP_TYPES = {"dynamics": "str", "master_seed": "int", "output_dir": "str"}


def from_flat(items):
    """Build a config from ``(line_number, key, value)`` triples or a ``key -> value`` mapping."""
    if isinstance(items, dict):
        items = [(None, k, v) for k, v in items.items()]
    top = {}
    sections = {name: {} for name in _SECTIONS}
    family = []
    seen = set()
    for line, key, value in items:
        if key in seen:
            raise ConfigError(f"duplicate key {key!r}", line)
        seen.add(key)
        try:
            if key in _TOP:
                top[key] = _convert(value, _TOP_TYPES[key])
                continue
            section, dot, name = key.partition(".")
            if not dot or not name:
                raise ConfigError(f"unknown key {key!r}", line)
            if section == "test_family":
                parse_member(value, _max_mode(value), name)
                family.append((name, value))
                continue
            cls = _SECTIONS.get(section)
            types = {f.name: f.type for f in fields(cls)} if cls else {}
            if name not in types:
                raise ConfigError(f"unknown key {key!r}", line)
            sections[section][name] = _convert(value, types[name])
        except ConfigError:
            raise
        except (ValueError, DomainError) as exc:
            raise ConfigError(f"bad value for {key!r}: {exc}", line) from None
    try:
        built = {name: cls(**sections[name]) for name, cls in _SECTIONS.items()}
        return ExperimentConfig(**top, **built, test_family=tuple(family))
    except ConfigError as exc:
        raise ConfigError(str(exc)) from None


def _max_mode(spec):
    parts = spec.split()
    if len(parts) < 3:
        return 1
    return max(int(item.partition(":")[0]) for item in parts[2].split(","))


def parse_config_text(text):
    items = []
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, eq, value = line.partition("=")
        if not eq:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", number)
        key = key.strip()
        if not key:
            raise ConfigError("empty key", number)
        items.append((number, key, value.strip()))
    return from_flat(items)


def load_config(path):
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config_text(text)
