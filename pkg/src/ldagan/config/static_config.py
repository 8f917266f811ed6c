from ldagan.config.cfg_item import Config, ConfigHolder, choice_validator, validate_non_neg_int, validate_pos_int

# Allowed interval units
INTERVAL_UNITS = ["S", "M", "H", "D", "MIDNIGHT"] + [f"W{x}" for x in range(7)]


# Interval unit validation
def validate_interval_unit(name: str, value: str) -> str:
    return choice_validator(INTERVAL_UNITS)(name, value.upper() if isinstance(value, str) else value)


# File logging configuration for CLI commands
class LogsConfigItems(ConfigHolder):
    LOGS_FOLDER = Config(name="logs_folder", description="Output folder relative path where to store rolling logs", default_value="logs")
    LOGS_BACKUP = Config(
        name="logs_backup",
        description="Backup log files to be persisted for each logger on rollover",
        default_value=10,
        validator=validate_non_neg_int,
    )
    LOGS_ROLLOVER_INTERVAL_UNIT = Config(
        name="logs_interval_unit",
        description="Rollover interval unit (see TimedRotatingFileHandler documentation)",
        default_value="H",
        validator=validate_interval_unit,
    )
    LOGS_ROLLOVER_INTERVAL = Config(
        name="logs_interval",
        description="Rollover interval (see TimedRotatingFileHandler documentation)",
        default_value=1,
        validator=validate_pos_int,
    )
