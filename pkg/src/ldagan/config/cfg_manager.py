import logging
import os
from pathlib import Path
from typing import Any, Dict, List

from ldagan.config.cfg_item import Config, ConfigHolder
from ldagan.errors import LdaganException, ResultCode
from ldagan.persist import load_json_document

# Prefix for environment variables providing config defaults
ENV_PREFIX = "LDAGAN_"


class ConfigManager:
    """
    Configuration manager, resolving config items values from the different layers:
    hard-coded defaults, environment, JSON config document, command-line overrides

    Constructor arguments:
        items:
            list of Config instances or ConfigHolder classes
        config_file:
            path to a JSON config document (optional)
        cli_config:
            dict of name:value overrides provided on the command line (optional)
        strict:
            if True, unknown names in config document/command-line are rejected
    """

    def __init__(self, items: List[Any], config_file: Path = None, cli_config: Dict[str, Any] = None, strict: bool = True):
        self.logger = logging.getLogger(type(self).__name__)
        self.items = self.__serialize_items(items)
        self.config_file = config_file
        self.cli_config = cli_config if cli_config is not None else {}
        self.strict = strict

        # Resolve all values, then validate them
        values = self.__load_values()
        for name, item in self.items.items():
            if name not in values:
                if item.required:
                    raise LdaganException(f"Missing required config item: {name}", ResultCode.ERROR_PARAM_MISSING)
                item.reset()
            else:
                item.update(values[name])

        # Simple dump of all loaded items
        self.logger.debug("Items dump on load:")
        for name, item in self.items.items():
            self.logger.debug(f" - {name}: {item.value} (default: {item.default_value})")

    def __serialize_items(self, input_list: List[Any]) -> Dict[str, Config]:
        # Browse input list items, that may be:
        # - either a Config instance
        # - or a ConfigHolder containing a list of Config instances
        out = {}
        for candidate in input_list:
            if isinstance(candidate, Config):
                out[candidate.name] = candidate
            elif isinstance(candidate, type) and issubclass(candidate, ConfigHolder):
                out.update({i.name: i for i in candidate.all_config_items()})
            else:
                raise LdaganException(f"Not a config item nor a config holder: {candidate}", ResultCode.ERROR_PARAM_INVALID)
        return out

    def __check_names(self, origin: str, names: List[str]):
        unknown_items = [n for n in names if n not in self.items]
        if self.strict and len(unknown_items):
            raise LdaganException(f"Unknown config item names in {origin}: " + ", ".join(unknown_items), ResultCode.ERROR_ITEM_UNKNOWN)

    def __validate_config_file(self, config_file: Path, json_model: Any):
        if not isinstance(json_model, dict):
            raise LdaganException(f"Invalid config json file (expecting a simple object): {config_file}", ResultCode.ERROR_MODEL_INVALID)
        self.__check_names(f"config file {config_file}", list(json_model.keys()))

    def __load_env_config(self) -> Dict[str, str]:
        # Check if configuration item value is provided by environment
        # (env var for lr_d config name is LDAGAN_LR_D)
        env_defaults = {}
        for name in self.items.keys():
            env_name = ENV_PREFIX + name.upper()
            if env_name in os.environ:
                env_defaults[name] = os.environ[env_name]
        return env_defaults

    def __load_values(self) -> Dict[str, Any]:
        # Layer 1: environment (hard-coded defaults are handled by items themselves)
        values = self.__load_env_config()
        self.logger.debug(f"Loading values (from environment): {values}")

        # Layer 2: config document
        if self.config_file is not None:
            values.update(load_json_document(self.config_file, self.__validate_config_file))
            self.logger.debug(f"Loading values (from config file at {self.config_file}): {values}")

        # Layer 3: command-line
        self.__check_names("command-line", list(self.cli_config.keys()))
        values.update({k: v for k, v in self.cli_config.items() if k in self.items})
        self.logger.debug(f"Loading values (from cli options): {values}")

        return values

    @property
    def values(self) -> Dict[str, Any]:
        return {name: item.value for name, item in self.items.items()}
