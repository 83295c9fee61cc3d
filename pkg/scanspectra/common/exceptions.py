from sys import exc_info


class ChainException(Exception):
    def __init__(self, message, cause=None):
        Exception.__init__(self, message)
        self.cause = cause


class DomainError(ChainException):
    """Input outside the mathematical domain of an operation."""
    pass


class ReducibleChainError(DomainError):
    pass


class UnsupportedError(ChainException):
    """Request is valid but beyond what is computed exactly at desk scale."""
    pass


class ModelFileError(ChainException):
    def __init__(self, message, cause=None, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message, cause)
        self.line = line


class SchemaVersionError(ChainException):
    pass


class SimulationError(ChainException):
    pass


class ConfigException(Exception):
    pass


class UsageError(Exception):
    pass


class Chain(object):
    """
    This class can be used as a decorator to override the type of exceptions returned by a function
    """

    def __init__(self, exception, passthrough=(ChainException,)):
        self.exception = exception
        self.passthrough = passthrough

    def _wrap(self, e):
        if isinstance(e, self.passthrough):
            raise e
        wrapped = self.exception(str(e), e)
        raise wrapped.with_traceback(exc_info()[2])

    def __call__(self, original):
        def wrapper(*args, **kwargs):
            try:
                return original(*args, **kwargs)
            except Exception as e:
                self._wrap(e)

        wrapper.__name__ = original.__name__
        wrapper.__doc__ = original.__doc__
        wrapper.__dict__.update(original.__dict__)

        return wrapper

    def execute(self, func, *args, **kwargs):
        try:
            return func(*args, **kwargs)
        except Exception as e:
            self._wrap(e)
