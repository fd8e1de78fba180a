"""Exception hierarchy; ``DomainError`` subclasses map to CLI exit code 1."""


class DomainError(ValueError):
    """Bad data or a numerical procedure that cannot produce a result."""


class QuoteNotFoundError(DomainError, KeyError):
    pass


class NoSolutionError(DomainError):
    pass


class InconsistentSmilesError(DomainError):
    pass


class ConvergenceError(DomainError):
    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result
