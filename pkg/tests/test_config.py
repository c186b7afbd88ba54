import pytest
import yaml

from distirl import ScenarioConfig
from distirl.errors import ConfigError


def test_defaults():
    c = ScenarioConfig().validate()
    assert (c.dt, c.T, c.N, c.M) == (0.0005, 1.2, 100, 150)
    assert c.alpha == c.alpha_theta == 1 / 100
    assert c.beta == c.beta_theta == 0.5
    assert c.n_steps == 200000


def test_round_trip(tmp_path):
    c = ScenarioConfig(t_final=7.0, psi=0.02, x1_0=[0.5, 0.25])
    path = tmp_path / "c.yaml"
    path.write_text(c.dumps())
    assert ScenarioConfig.load(path) == c


def test_unknown_key_rejected(tmp_path):
    path = tmp_path / "c.yaml"
    path.write_text("dt: 0.0005\nbogus: 3\n")
    with pytest.raises(ConfigError, match="bogus"):
        ScenarioConfig.load(path)


def test_empty_file_gives_defaults(tmp_path):
    path = tmp_path / "c.yaml"
    path.write_text("")
    assert ScenarioConfig.load(path) == ScenarioConfig()


def test_non_mapping_rejected(tmp_path):
    path = tmp_path / "c.yaml"
    path.write_text("- 1\n- 2\n")
    with pytest.raises(ConfigError):
        ScenarioConfig.load(path)


@pytest.mark.parametrize("changes", [
    {"dt": 0.0007},
    {"beta": 0.0},
    {"N": -1},
    {"gamma_bounds": [1.0, 0.5]},
    {"quadrature": "midpoint"},
    {"x1_0": [1.0]},
    {"K": [[1.0, 0.0]]},
    {"theta_hat_0": [[0.0, 0.0]]},
    {"zeta_0": [float("nan"), 0.0]},
    {"c_lower": -1.0},
])
def test_invalid_configs(changes):
    with pytest.raises(ConfigError):
        ScenarioConfig().replace(**changes)


def test_replace_rederives_alpha():
    assert ScenarioConfig().replace(N=50).alpha == pytest.approx(1 / 50)
    assert ScenarioConfig().replace(N=50, alpha=0.3).alpha == 0.3


def test_dump_is_flat_mapping():
    data = yaml.safe_load(ScenarioConfig().dumps())
    assert isinstance(data, dict) and data["T"] == 1.2
