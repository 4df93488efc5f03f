import pytest

from holab.config import ScenarioConfig, TrainConfig, parse_config_text
from holab.errors import ConfigError


def test_defaults_pass_validation():
    ScenarioConfig().validate()
    TrainConfig().validate()


def test_default_window_and_cell_counts():
    cfg = ScenarioConfig()
    assert cfg.num_windows == 200
    assert cfg.num_cells == 21
    assert cfg.num_ues == 630


@pytest.mark.parametrize("field,value", [
    ("inter_site_distance", 0.0),
    ("sample_period", 0.3),  # does not divide 40 s evenly
    ("max_neighbors", 0),
    ("cluster_diameter", 600.0),
    ("obstacle_height", 20.0),  # below eNB height
    ("ues_per_sector", 0),
    ("file_size", 0),
])
def test_invalid_scenario_fields_rejected(field, value):
    cfg = ScenarioConfig(**{field: value})
    with pytest.raises(ConfigError) as err:
        cfg.validate()
    assert field.split("_")[0] in str(err.value) or field in str(err.value)


def test_train_config_bounds():
    with pytest.raises(ConfigError):
        TrainConfig(batch_size=0).validate()
    with pytest.raises(ConfigError):
        TrainConfig(validation_fraction=1.0).validate()
    with pytest.raises(ConfigError):
        TrainConfig(epochs=0).validate()


def test_parse_config_text_roundtrip():
    text = """
    # comment line
    inter_site_distance = 400
    ues_per_sector = 2
    batch_size = 16
    lr = 0.01
    """
    scen, train = parse_config_text(text)
    assert scen.inter_site_distance == 400.0
    assert scen.ues_per_sector == 2
    assert train.batch_size == 16
    assert train.lr == 0.01


def test_parse_config_unknown_key_lists_valid_keys():
    with pytest.raises(ConfigError) as err:
        parse_config_text("bogus_key = 3\n")
    msg = str(err.value)
    assert "bogus_key" in msg
    assert "inter_site_distance" in msg
    assert "batch_size" in msg


def test_parse_config_bad_value_and_missing_equals():
    with pytest.raises(ConfigError):
        parse_config_text("ues_per_sector = abc\n")
    with pytest.raises(ConfigError):
        parse_config_text("just a line\n")
