"""Exception hierarchy shared across the package.

Two families: :class:`ValidationError` for inputs that violate a contract
(bad parameters, invalid brackets, non-Hermitian matrices), and
:class:`NumericsError` for failures that arise during computation
(integrator underflow, singular maps, evaluation at a pole).  The CLI maps
the first family to exit code 1 and the second to exit code 2.
"""


class ValidationError(ValueError):
    """Input violates a documented precondition."""


class RegimeError(ValidationError):
    """Operation called outside the parameter regime where it is defined."""


class DegenerateModelError(ValidationError):
    """Both coupling and cooling are zero: the model has no dynamics."""


class NumericsError(ArithmeticError):
    """A numerical procedure failed (non-finite values, step underflow...)."""


class PoleError(NumericsError):
    """Evaluation requested at (or too close to) a zero of the coherence factor.

    ``nearest_zero`` carries the location of the closest zero when one
    exists; it is ``None`` when the coherence factor has merely decayed
    below the resolvable threshold without crossing zero.
    """

    def __init__(self, message: str, nearest_zero: float | None = None):
        super().__init__(message)
        self.nearest_zero = nearest_zero


class SingularMapError(NumericsError):
    """An intermediate evolution map does not exist at the requested time."""
