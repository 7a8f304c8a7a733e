import pytest

from burgerslab.config import (
    DEFAULT_SEED,
    ConfigError,
    ExperimentConfig,
    from_flat,
    load_config,
    parse_config_text,
    parse_sparse,
)

SAMPLE = """\
# heat run
dynamics = heat
master_seed = 7
integrator.n_modes = 16
integrator.dt = 5e-4
integrator.grid_points = auto
estimator.m_samples = 200
ensemble.gap = 0.1
experiment.phi = sin 1 2:2.0
test_family.a = cos 1 1:1
test_family.b = sin 0.5 1:1,3:2
"""


def test_defaults():
    cfg = ExperimentConfig()
    assert cfg.master_seed == DEFAULT_SEED and cfg.dynamics == "burgers"
    icfg = cfg.integrator_config()
    assert icfg.n_modes == 8 and icfg.nonlinear and icfg.seed == DEFAULT_SEED
    assert cfg.family() is None


def test_parse_sample():
    cfg = parse_config_text(SAMPLE)
    assert cfg.dynamics == "heat" and cfg.master_seed == 7
    assert cfg.integrator.n_modes == 16 and cfg.integrator.grid_points is None
    assert cfg.ensemble.gap == 0.1 and cfg.ensemble.burn_in is None
    assert not cfg.integrator_config().nonlinear
    assert [m.label for m in cfg.family()] == ["a", "b"]
    assert cfg.phi().ell[1] == 2.0


def test_text_round_trip():
    cfg = parse_config_text(SAMPLE)
    assert parse_config_text(cfg.to_text()) == cfg
    assert from_flat(cfg.to_flat()) == cfg
    assert parse_config_text(ExperimentConfig().to_text()) == ExperimentConfig()


@pytest.mark.parametrize("text, line", [
    ("dynamics = heat\nintegrator.n_mode = 4\n", 2),
    ("integrator.dt = 1e-3\nintegrator.dt = 2e-3\n", 2),
    ("\n\nintegrator.n_modes = four\n", 3),
    ("dynamics heat\n", 1),
    ("test_family.x = tan 1 1:1\n", 1),
    ("bogus = 1\n", 1),
])
def test_errors_carry_line_numbers(text, line):
    with pytest.raises(ConfigError) as info:
        parse_config_text(text)
    assert info.value.line == line
    assert f"line {line}" in str(info.value)


@pytest.mark.parametrize("text", [
    "dynamics = navier\n",
    "integrator.dt = -1\n",
    "integrator.n_modes = 4\nintegrator.grid_points = 6\n",
    "estimator.p = 1\n",
    "estimator.delta = 0\n",
    "ensemble.count = 0\n",
    "experiment.x0 = 9:1\n",
    "master_seed = -1\n",
])
def test_invalid_values(text):
    with pytest.raises(ConfigError):
        parse_config_text(text)


def test_override():
    cfg = ExperimentConfig().override(**{"integrator.n_modes": 4, "master_seed": 3})
    assert cfg.integrator.n_modes == 4 and cfg.master_seed == 3
    with pytest.raises(ConfigError):
        ExperimentConfig().override(**{"integrator.dt": 10.0})


def test_parse_sparse():
    assert parse_sparse("1:1.0,3:-0.5") == {1: 1.0, 3: -0.5}
    assert parse_sparse("") == {} and parse_sparse("0") == {}
    with pytest.raises(ValueError):
        parse_sparse("1=2")


def test_load_config(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text(SAMPLE)
    assert load_config(path) == parse_config_text(SAMPLE)
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.cfg")
