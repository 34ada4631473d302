class ArenError(Exception):
    """Base class for all errors raised by arenvq"""
    exit_code = 1


class ContractError(ArenError, ValueError):
    """An operation was called outside its preconditions"""
    pass


class ResourceError(ArenError, MemoryError):
    """A configured resource budget would be exceeded"""
    pass


class ConfigError(ArenError):
    """The run configuration is invalid"""

    def __init__(self, problems):
        if isinstance(problems, str):
            problems = [problems]
        self.problems = list(problems)
        super(ConfigError, self).__init__("; ".join(self.problems))


class DataError(ArenError):
    """Input data could not be used"""
    exit_code = 2


class CheckpointError(DataError):
    """A checkpoint file is malformed"""

    def __init__(self, message, offset=None, entry=None):
        self.offset = offset
        self.entry = entry
        if entry is not None:
            message = '{} (entry "{}")'.format(message, entry)
        if offset is not None:
            message = "{} at offset {}".format(message, offset)
        super(CheckpointError, self).__init__(message)


class NumericError(ArenError, ArithmeticError):
    """A non-finite value showed up where it must not"""
    exit_code = 3

    def __init__(self, message, step=None):
        self.step = step
        if step is not None:
            message = "{} at step {}".format(message, step)
        super(NumericError, self).__init__(message)
