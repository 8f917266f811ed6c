import re
from typing import Any, Callable, List

from ldagan.errors import LdaganException, ResultCode

# Pattern for config item name (also used as JSON key)
NAME_PATTERN = re.compile("[A-Za-z][A-Za-z0-9_]*$")


# Integer validation
def validate_int(name: str, value: Any) -> int:
    if isinstance(value, bool) or (isinstance(value, float) and not value.is_integer()):
        raise LdaganException(f"Invalid int value for config item {name}: {value}", rc=ResultCode.ERROR_PARAM_INVALID)
    try:
        return int(value)
    except (TypeError, ValueError):
        raise LdaganException(f"Invalid int value for config item {name}: {value}", rc=ResultCode.ERROR_PARAM_INVALID)


# Float validation
def validate_float(name: str, value: Any) -> float:
    if isinstance(value, bool):
        raise LdaganException(f"Invalid float value for config item {name}: {value}", rc=ResultCode.ERROR_PARAM_INVALID)
    try:
        out = float(value)
    except (TypeError, ValueError):
        raise LdaganException(f"Invalid float value for config item {name}: {value}", rc=ResultCode.ERROR_PARAM_INVALID)
    if out != out or out in (float("inf"), float("-inf")):
        raise LdaganException(f"Expected finite value for config item {name} but got {value}", rc=ResultCode.ERROR_PARAM_INVALID)
    return out


# Positive number validation
def validate_pos(name: str, value: Any, type_validator: Callable):
    out = type_validator(name, value)
    if out <= 0:
        raise LdaganException(f"Expected strictly positive value for config item {name} but got {value}", rc=ResultCode.ERROR_PARAM_INVALID)
    return out


# Non-negative number validation
def validate_non_neg(name: str, value: Any, type_validator: Callable):
    out = type_validator(name, value)
    if out < 0:
        raise LdaganException(f"Expected non-negative value for config item {name} but got {value}", rc=ResultCode.ERROR_PARAM_INVALID)
    return out


def validate_pos_int(name: str, value: Any) -> int:
    return validate_pos(name, value, validate_int)


def validate_non_neg_int(name: str, value: Any) -> int:
    return validate_non_neg(name, value, validate_int)


def validate_pos_float(name: str, value: Any) -> float:
    return validate_pos(name, value, validate_float)


def validate_non_neg_float(name: str, value: Any) -> float:
    return validate_non_neg(name, value, validate_float)


# Probability-like coefficient (Adam betas)
def validate_unit_float(name: str, value: Any) -> float:
    out = validate_float(name, value)
    if not 0.0 <= out < 1.0:
        raise LdaganException(f"Expected value in [0, 1) for config item {name} but got {value}", rc=ResultCode.ERROR_PARAM_INVALID)
    return out


# List of positive integers, either as a JSON list or as a comma-separated string
def validate_pos_int_list(name: str, value: Any) -> List[int]:
    if isinstance(value, str):
        value = [v for v in value.split(",") if len(v.strip())]
    if not isinstance(value, (list, tuple)):
        raise LdaganException(f"Invalid int list value for config item {name}: {value}", rc=ResultCode.ERROR_PARAM_INVALID)
    return [validate_pos_int(name, v) for v in value]


def choice_validator(choices: List[str]) -> Callable:
    """
    Builds a validator accepting only one of the provided strings
    """

    def validate_choice(name: str, value: Any) -> str:
        if not isinstance(value, str) or value not in choices:
            raise LdaganException(f"Invalid value for config item {name}: {value} (expected one of: {', '.join(choices)})", rc=ResultCode.ERROR_PARAM_INVALID)
        return value

    return validate_choice


def validate_string(name: str, value: Any) -> str:
    if not isinstance(value, str):
        raise LdaganException(f"Invalid string value for config item {name}: {value}", rc=ResultCode.ERROR_PARAM_INVALID)
    return value


class Config:
    """
    Configuration item definition.

    Constructor arguments:
        name:
            item name; also the key used in JSON config documents, and (upper-cased, with LDAGAN_ prefix) in environment
        description:
            help string
        default_value:
            hard-coded default value (ignored for required items)
        validator:
            method taking a "name" and a raw "value" (JSON value or string), returning the parsed value,
            and raising an LdaganException if the value is invalid
        required:
            states if the item must be explicitly provided by the configuration document (or command-line)
    """

    def __init__(self, name: str, description: str = "", default_value: Any = None, validator: Callable = validate_string, required: bool = False):
        # Validate name
        if NAME_PATTERN.match(name) is None:
            raise LdaganException(f"Invalid config item name: {name}", ResultCode.ERROR_PARAM_INVALID)

        self.name = name
        self.description = description
        self.required = required
        self.hard_coded_default_value = default_value
        self.__validate = validator
        self.value = default_value

    @property
    def default_value(self) -> Any:
        return self.hard_coded_default_value

    def reset(self):
        # Reset item value to its default one
        self.value = self.hard_coded_default_value

    def update(self, value: Any):
        # Validate item before update
        self.value = self.validate(self.name, value)

    def validate(self, name: str, value: Any) -> Any:
        # Can't be empty
        if value is None or value == "":
            raise LdaganException(f"Empty value provided for item {name} (not supported)", rc=ResultCode.ERROR_PARAM_MISSING)

        # Delegate to validator
        return self.__validate(name, value)


class ConfigHolder:
    """
    A base class from which configuration items holders may inherit
    """

    @classmethod
    def all_config_items(cls) -> List[Config]:
        return list(filter(lambda x: isinstance(x, Config), cls.__dict__.values()))
