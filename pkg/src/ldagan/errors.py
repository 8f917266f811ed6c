from enum import IntEnum


class ResultCode(IntEnum):
    """
    Error codes carried by LdaganException instances
    """

    OK = 0
    ERROR = 1
    ERROR_PARAM_INVALID = 2
    ERROR_PARAM_MISSING = 3
    ERROR_ITEM_UNKNOWN = 4
    ERROR_MODEL_INVALID = 5
    ERROR_VERSION = 6
    ERROR_DOMAIN = 7
    ERROR_SHAPE = 8
    ERROR_DIVERGENCE = 9
    ERROR_IO = 10


class LdaganException(Exception):  # NOQA: N818
    """
    Common error class, holding an error code (typically to be mapped to a CLI exit code)
    """

    def __init__(self, message: str, rc: int = ResultCode.ERROR):
        super().__init__(message)
        self.rc = rc
