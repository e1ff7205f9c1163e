"""Exception hierarchy shared across the package."""


class SlraError(Exception):
    """Base class for all errors raised by slra."""


class InvalidArgumentError(SlraError, ValueError):
    """An argument violates a documented precondition."""


class ContractViolationError(SlraError, RuntimeError):
    """An algorithmic contract was violated at runtime."""


class IllConditionedBasisError(ContractViolationError):
    """A basis passed to a least-squares projection is too ill-conditioned."""


class DegenerateDeflationError(ContractViolationError):
    """Explicit deflation tried to normalize a (near) zero vector."""


class UndefinedCrossoverError(ContractViolationError):
    """Crossover points are undefined when omega == 2."""


class NumericFailureError(SlraError, ArithmeticError):
    """A computation produced non-finite values."""
