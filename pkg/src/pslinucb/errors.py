"""Exception types shared across the package."""


class BanditError(Exception):
    """Base class for package-specific errors."""


class ConfigError(BanditError):
    """Invalid experiment or policy configuration."""


class ContractError(BanditError):
    """API misuse: out-of-order calls or removal of data never added."""


class NumericError(BanditError):
    """Non-finite values or an unsolvable linear system."""


class LogParseError(BanditError):
    """Malformed replay log record.

    Carries the 1-based line number of the offending record.
    """

    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class ExperimentError(BanditError):
    """A run inside an experiment failed; the message names the seed."""
