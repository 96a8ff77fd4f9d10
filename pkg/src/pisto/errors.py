"""Exception types shared across the package.

Invalid arguments raise plain ``ValueError``; these classes cover numeric
conditions a caller may want to catch and recover from.
"""


class NumericalError(RuntimeError):
    """A numeric operation failed (e.g. a Cholesky factorization of a matrix
    that should have been positive definite)."""


class DegenerateWeightsError(RuntimeError):
    """Every importance weight underflowed to zero; the caller should fall
    back to uniform weights and log the event."""


class SceneGenerationError(RuntimeError):
    """Random scene generation exhausted its rejection-sampling budget."""
