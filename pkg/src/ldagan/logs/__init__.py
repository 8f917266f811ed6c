# Public Logs API
from ldagan.logs.logs_utils import add_rotating_handler, clean_rotating_handler

__all__ = ["add_rotating_handler", "clean_rotating_handler"]
