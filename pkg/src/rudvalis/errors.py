"""Exception hierarchy. The CLI maps each class to an exit code."""


class RudvalisError(Exception):
    exit_code = 1


class ValidationError(RudvalisError, ValueError):
    """Bad parameters: deck size, probabilities, epsilon, ..."""

    exit_code = 2


class LemmaInapplicableError(ValidationError):
    """The eigenvalue violates Re(lambda) >= 1/2."""


class SolverError(RudvalisError, ArithmeticError):
    exit_code = 3


class CapExceededError(RudvalisError):
    """Exact state space too large to enumerate."""

    exit_code = 4
