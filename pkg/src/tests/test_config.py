import json
import os

import pytest

from ldagan.config import Config, ConfigHolder, TrainConfig, load_train_config
from ldagan.config.cfg_item import validate_pos_float, validate_pos_int, validate_pos_int_list
from ldagan.config.cfg_manager import ConfigManager
from ldagan.config.static_config import LogsConfigItems
from ldagan.errors import LdaganException, ResultCode
from tests.utils import TestUtils


class SampleConfig(ConfigHolder):
    INT_ITEM = Config(name="my_int_config", description="sample int configuration", default_value=12, validator=validate_pos_int)


class TestConfig(TestUtils):
    @pytest.fixture
    def config_file(self):
        # Sample config document
        path = self.test_folder / "config.json"
        with path.open("w") as f:
            json.dump({"K": 4, "my_int_config": "1024", "seed": 7}, f)
        yield path

    @pytest.fixture
    def env_config(self, clean_env):
        # Populate values in environment
        os.environ["LDAGAN_MY_INT_CONFIG"] = "456"
        os.environ["LDAGAN_SEED"] = "5"
        yield

    def test_invalid_config_name(self):
        try:
            # Invalid config name
            Config(name="With-Dash")
            raise AssertionError("Shouldn't get here")
        except LdaganException as e:
            assert e.rc == ResultCode.ERROR_PARAM_INVALID

    def test_invalid_items(self):
        try:
            # Neither a config item, nor a holder
            ConfigManager(["foo"])
            raise AssertionError("Shouldn't get here")
        except LdaganException as e:
            assert e.rc == ResultCode.ERROR_PARAM_INVALID

    def test_hard_coded_default(self):
        ConfigManager([SampleConfig])
        assert SampleConfig.INT_ITEM.value == 12

    def test_file_default(self, config_file):
        ConfigManager([SampleConfig], config_file=config_file, strict=False)
        assert SampleConfig.INT_ITEM.value == 1024

    def test_env_default(self, env_config):
        ConfigManager([SampleConfig])
        assert SampleConfig.INT_ITEM.value == 456

    def test_file_over_env(self, config_file, env_config):
        ConfigManager([SampleConfig], config_file=config_file, strict=False)
        assert SampleConfig.INT_ITEM.value == 1024

    def test_cli_over_file(self, config_file, env_config):
        ConfigManager([SampleConfig], config_file=config_file, cli_config={"my_int_config": "357"}, strict=False)
        assert SampleConfig.INT_ITEM.value == 357

    def test_reset(self, env_config):
        ConfigManager([SampleConfig])
        assert SampleConfig.INT_ITEM.value == 456
        del os.environ["LDAGAN_MY_INT_CONFIG"]
        ConfigManager([SampleConfig])
        assert SampleConfig.INT_ITEM.value == 12

    def test_validators(self):
        for validator, value in [
            (validate_pos_int, "foo"),
            (validate_pos_int, "-3"),
            (validate_pos_int, 1.5),
            (validate_pos_int, True),
            (validate_pos_float, "nan"),
            (validate_pos_float, 0.0),
            (validate_pos_int_list, "8,foo"),
            (validate_pos_int_list, 3),
        ]:
            try:
                validator("item", value)
                raise AssertionError("Shouldn't get here")
            except LdaganException as e:
                assert e.rc == ResultCode.ERROR_PARAM_INVALID
        assert validate_pos_int_list("item", "16, 8") == [16, 8]
        assert validate_pos_int_list("item", [4]) == [4]
        assert validate_pos_float("item", "1e-3") == 1e-3

    def test_empty_value(self):
        try:
            ConfigManager([SampleConfig], cli_config={"my_int_config": ""})
            raise AssertionError("Shouldn't get here")
        except LdaganException as e:
            assert e.rc == ResultCode.ERROR_PARAM_MISSING

    def test_train_config_defaults(self):
        cfg = load_train_config(overrides={"K": "8"})
        assert cfg == TrainConfig(K=8)
        assert cfg.noise_dim == 256
        assert cfg.disc_hidden == [128, 128]
        assert cfg.fake_sampling == "stratified"
        assert cfg.alpha_init == 2.0
        assert cfg.head_init_std == 0.25
        assert cfg.head_bias_sigma == 0.5
        assert cfg.to_dict()["K"] == 8

        # Zero biases are allowed
        assert load_train_config(overrides={"K": "8", "head_bias_sigma": "0"}).head_bias_sigma == 0.0

    def test_train_config_missing_k(self):
        try:
            load_train_config()
            raise AssertionError("Shouldn't get here")
        except LdaganException as e:
            assert e.rc == ResultCode.ERROR_PARAM_MISSING
            assert "K" in str(e)

    def test_train_config_file(self, env_config):
        path = self.test_folder / "train.json"
        path.write_text(json.dumps({"K": 4, "disc_hidden": [16, 16], "lr_d": 0.01}))
        cfg = load_train_config(path, {"noise_dim": "8"})
        assert cfg.K == 4
        assert cfg.disc_hidden == [16, 16]
        assert cfg.lr_d == 0.01
        assert cfg.noise_dim == 8

        # Seed from environment
        assert cfg.seed == 5

    def test_train_config_errors(self):
        path = self.test_folder / "train.json"
        for model, rc in [
            ({"K": 4, "foo": 1}, ResultCode.ERROR_ITEM_UNKNOWN),
            ({"K": 0}, ResultCode.ERROR_PARAM_INVALID),
            ({"K": 4, "lr_d": -1.0}, ResultCode.ERROR_PARAM_INVALID),
            ({"K": 4, "fake_sampling": "foo"}, ResultCode.ERROR_PARAM_INVALID),
            ({"K": 4, "adam_beta1": 1.0}, ResultCode.ERROR_PARAM_INVALID),
            ({"K": 4, "alpha_init": 1e-4}, ResultCode.ERROR_PARAM_INVALID),
            ({"K": 4, "head_bias_sigma": -0.1}, ResultCode.ERROR_PARAM_INVALID),
            ({"K": 4, "head_init_std": 0.0}, ResultCode.ERROR_PARAM_INVALID),
            ([4], ResultCode.ERROR_MODEL_INVALID),
        ]:
            path.write_text(json.dumps(model))
            try:
                load_train_config(path)
                raise AssertionError("Shouldn't get here")
            except LdaganException as e:
                assert e.rc == rc

        # Bad JSON
        path.write_text('{"K": ')
        try:
            load_train_config(path)
            raise AssertionError("Shouldn't get here")
        except LdaganException as e:
            assert e.rc == ResultCode.ERROR_MODEL_INVALID

        # Unknown command-line item
        try:
            load_train_config(overrides={"K": 2, "bar": 3})
            raise AssertionError("Shouldn't get here")
        except LdaganException as e:
            assert e.rc == ResultCode.ERROR_ITEM_UNKNOWN
            assert "bar" in str(e)

    def test_logs_config(self, clean_env):
        os.environ["LDAGAN_LOGS_INTERVAL_UNIT"] = "foo"
        try:
            ConfigManager([LogsConfigItems])
            raise AssertionError("Shouldn't get here")
        except LdaganException as e:
            assert e.rc == ResultCode.ERROR_PARAM_INVALID

        os.environ["LDAGAN_LOGS_INTERVAL_UNIT"] = "midnight"
        ConfigManager([LogsConfigItems])
        assert LogsConfigItems.LOGS_ROLLOVER_INTERVAL_UNIT.value == "MIDNIGHT"
