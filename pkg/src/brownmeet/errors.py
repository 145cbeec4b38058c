"""Exception hierarchy shared by all modules."""


class BrownMeetError(Exception):
    """Base class for every error raised by the package."""


class DomainError(BrownMeetError, ValueError):
    """Input lies outside the admissible set (e.g. x1 > x2, b <= a)."""


class PoleProximity(BrownMeetError, ArithmeticError):
    """Argument is within pole tolerance of a lattice point of the Weierstrass function."""


class BranchPointError(BrownMeetError, ArithmeticError):
    """A multivalued map was evaluated at one of its branch points."""


class PoleAtVertex(BrownMeetError, ArithmeticError):
    """The inverse conformal map was evaluated at (or next to) the vertex sent to infinity."""


class DegenerateDerivative(BrownMeetError, ArithmeticError):
    """Derivative formula divides by a vanishing Weierstrass derivative."""


class CornerUndefined(BrownMeetError, ArithmeticError):
    """Quantity is undefined at a triangle vertex where the boundary data jump."""


class ConditioningError(BrownMeetError, ArithmeticError):
    """Meeting probability is too small for a conditional quantity to be meaningful."""


class QuadratureError(BrownMeetError, ArithmeticError):
    """Adaptive quadrature did not reach its requested tolerance."""

    def __init__(self, message, error_estimate):
        super().__init__(f"{message} (error estimate {error_estimate:.3e})")
        self.error_estimate = error_estimate


class NonConvergence(BrownMeetError, RuntimeError):
    """Iterative solver hit its iteration cap before reaching tolerance."""

    def __init__(self, iterations, residual):
        super().__init__(
            f"solver stopped after {iterations} iterations with residual {residual:.3e}"
        )
        self.iterations = iterations
        self.residual = residual


class Truncated(BrownMeetError, RuntimeError):
    """A simulated realization reached max_steps without an absorbing event."""
