"""Exception types shared across the package."""


class IetiError(Exception):
    """Base class for all errors raised by :mod:`ietidp`."""


class DimensionMismatch(IetiError, ValueError):
    pass


class NotPositiveDefinite(IetiError, ArithmeticError):
    """A nonpositive pivot appeared while factorizing a supposedly SPD matrix."""


class SingularMatrix(IetiError, ArithmeticError):
    """A (numerically) zero pivot appeared in a symmetric factorization."""


class OutOfDomain(IetiError, ValueError):
    """A parameter value lies outside the reference domain."""


class InvalidKnotVector(IetiError, ValueError):
    pass


class NotNested(IetiError, ValueError):
    """Neither of two spline spaces contains the other."""


class InvalidSubinterval(IetiError, ValueError):
    pass


class SingularJacobian(IetiError, ArithmeticError):
    pass


class NonAdmissibleDecomposition(IetiError, ValueError):
    """Two patches share a segment that is a full edge of neither of them."""


class SingularLocalSaddle(IetiError, ArithmeticError):
    def __init__(self, patch, msg=""):
        self.patch = patch
        super().__init__(f"local saddle-point system of patch {patch} is singular {msg}".strip())


class SingularCoarse(IetiError, ArithmeticError):
    pass


class SingularEdgeBlock(IetiError, ArithmeticError):
    pass


class IndefiniteOperatorDetected(IetiError, ArithmeticError):
    pass


class MaxIterationsExceeded(IetiError, RuntimeError):
    """Raised by PCG; carries the last iterate and the solve report."""

    def __init__(self, solution, report):
        self.solution = solution
        self.report = report
        super().__init__(f"PCG did not converge in {report.iterations} iterations")


class EmptyEstimator(IetiError, ValueError):
    pass


class NonTermination(IetiError, RuntimeError):
    pass
