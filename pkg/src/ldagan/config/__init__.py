# Public Config API
from ldagan.config.cfg_item import Config, ConfigHolder
from ldagan.config.cfg_manager import ConfigManager
from ldagan.config.static_config import LogsConfigItems
from ldagan.config.train_config import TrainConfig, TrainConfigItems, load_train_config

__all__ = ["Config", "ConfigHolder", "ConfigManager", "LogsConfigItems", "TrainConfig", "TrainConfigItems", "load_train_config"]
