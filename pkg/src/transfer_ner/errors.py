"""Exception hierarchy shared by every module.

Each family maps onto one CLI exit code (see ``exit_code``).
"""


class TransferNerError(Exception):
    exit_code = 1


class ConfigError(TransferNerError):
    """Invalid configuration or an impossible request (empty split, k > n, ...)."""

    exit_code = 2


class DataError(TransferNerError):
    exit_code = 3


class ParseError(DataError):
    def __init__(self, message, path=None, line=None):
        where = ""
        if path is not None:
            where = f"{path}:"
        if line is not None:
            where += f"{line}:"
        super().__init__(f"{where} {message}" if where else message)
        self.path = path
        self.line = line


class TagSetError(DataError):
    pass


class FormatError(DataError):
    pass


class DomainError(DataError):
    """An argument outside the mathematical domain of an operation."""


class ContractError(TransferNerError):
    """A caller broke a precondition that upstream code should have enforced."""


class TrainingDiverged(TransferNerError):
    exit_code = 4

    def __init__(self, message, epoch=None):
        super().__init__(message if epoch is None else f"{message} (epoch {epoch})")
        self.epoch = epoch
