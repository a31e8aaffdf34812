from typing import Optional


class RankForgeError(Exception):
    """Base error; ``exit_code`` is what the CLI returns to the shell."""

    exit_code: int = 1

    def __init__(self, detail: str):
        super().__init__(detail)
        self.detail = detail


class ConfigError(RankForgeError):
    exit_code = 2


class UsageError(RankForgeError, ValueError):
    """An API was called with arguments that violate its contract."""

    exit_code = 2


class DataError(RankForgeError):
    exit_code = 3


class LetorParseError(DataError):
    def __init__(self, detail: str, line_no: int):
        super().__init__(f"line {line_no}: {detail}")
        self.line_no = line_no


class DimensionMismatchError(DataError):
    pass


class CheckpointError(DataError):
    pass


class NumericError(RankForgeError):
    exit_code = 4

    def __init__(self, detail: str, qid: Optional[str] = None):
        super().__init__(detail if qid is None else f"{detail} (qid={qid})")
        self.qid = qid
