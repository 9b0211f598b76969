import pytest
import yaml

from routerev.config import DEFAULTS, dump_defaults, load_config
from routerev.errors import ConfigError
from routerev.instructions import TurnClass


def write(tmp_path, data):
    p = tmp_path / "cfg.yaml"
    p.write_text(yaml.safe_dump(data))
    return p


def test_defaults_roundtrip(tmp_path):
    p = tmp_path / "d.yaml"
    p.write_text(dump_defaults())
    assert load_config(p).data == DEFAULTS


def test_unknown_key(tmp_path):
    with pytest.raises(ConfigError, match="metrics.lamda_hd"):
        load_config(write(tmp_path, {"metrics": {"lamda_hd": 1.0}}))


def test_version_mismatch(tmp_path):
    with pytest.raises(ConfigError, match="version"):
        load_config(write(tmp_path, {"version": 2}))


def test_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_config(tmp_path / "nope.yaml")


def test_partial_weights_rejected():
    with pytest.raises(ConfigError):
        load_config(overrides={"metrics": {"weights": {"LR": 1.0}}})


def test_unknown_weight():
    with pytest.raises(ConfigError, match="XX"):
        load_config(overrides={"metrics": {"weights": {"XX": 1.0}}})


@pytest.mark.parametrize("over", [
    {"bands": {"slight": 5.0}},
    {"dataset": {"orientation": "sideways"}},
    {"client": {"mode": "telepathy"}},
    {"metrics": {"step": "five"}},
    {"metrics": {"step": None}},
])
def test_invalid_values(over):
    with pytest.raises(ConfigError):
        load_config(overrides=over)


def test_params_and_deflections():
    cfg = load_config(overrides={"metrics": {"lambda_hd": 99.0}, "deflections": {"plain": 85.0}})
    assert cfg.metric_params().lambda_hd == 99.0
    d = cfg.deflections()
    assert d[TurnClass.LEFT] == -85.0 and d[TurnClass.RIGHT] == 85.0
    assert set(cfg.trial_kwargs()) >= {"snap_cap", "inversion_threshold", "deflections"}
