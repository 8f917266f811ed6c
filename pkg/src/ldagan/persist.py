import json
import logging
from pathlib import Path
from typing import Any, Callable

from ldagan.errors import LdaganException, ResultCode

LOGGER = logging.getLogger("persist")


def load_json_document(path: Path, validator: Callable[[Path, Any], None] = None) -> Any:
    """
    Loads a JSON document, and verifies it with the provided validator (if any).
    The validator takes the file path and the decoded model, and raises an LdaganException if the model is invalid.
    """

    # Check file presence
    if not path.is_file():
        raise LdaganException(f"Missing file: {path}", ResultCode.ERROR_IO)

    try:
        with path.open("r", encoding="utf-8") as f:
            json_model = json.load(f)
    except json.JSONDecodeError as e:
        raise LdaganException(f"Invalid json file (bad json: {e}): {path}", ResultCode.ERROR_MODEL_INVALID)
    except (OSError, UnicodeDecodeError) as e:
        raise LdaganException(f"Can't read file {path}: {e}", ResultCode.ERROR_IO)

    # Also validate model with provided validator
    if validator is not None:
        validator(path, json_model)

    # Model looks to be valid: go on
    LOGGER.debug(f"Loaded json document: {path}")
    return json_model


def dump_json_document(model: Any) -> str:
    # Canonical text form: keys kept in insertion order, fixed indent, trailing newline
    return json.dumps(model, indent=4, allow_nan=False) + "\n"


def save_json_document(path: Path, model: Any):
    """
    Saves a JSON document (UTF-8, LF line endings)
    """
    try:
        text = dump_json_document(model)
    except ValueError as e:
        raise LdaganException(f"Can't serialize model to {path}: {e}", ResultCode.ERROR_DIVERGENCE)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", encoding="utf-8", newline="\n") as f:
            f.write(text)
    except OSError as e:
        raise LdaganException(f"Can't write file {path}: {e}", ResultCode.ERROR_IO)
    LOGGER.debug(f"Saved json document: {path}")


def append_json_line(path: Path, model: Any):
    """
    Appends one compact JSON object line to a JSONL file
    """
    try:
        line = json.dumps(model, allow_nan=False) + "\n"
    except ValueError as e:
        raise LdaganException(f"Can't serialize model to {path}: {e}", ResultCode.ERROR_DIVERGENCE)
    try:
        with path.open("a", encoding="utf-8", newline="\n") as f:
            f.write(line)
    except OSError as e:
        raise LdaganException(f"Can't write file {path}: {e}", ResultCode.ERROR_IO)
