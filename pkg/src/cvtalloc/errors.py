"""Exception types shared across the package."""


class CvtAllocError(Exception):
    """Base class for all library errors."""


# --- density ---------------------------------------------------------------

class UnboundFreeParameter(CvtAllocError):
    """A density with an unbound free parameter was used in an integral."""


class QuadratureNonConvergence(CvtAllocError):
    """Adaptive quadrature did not reach the requested tolerance."""


class EmptyCell(CvtAllocError):
    """A Voronoi cell carries (numerically) zero probability mass."""


class NoFreeParameter(CvtAllocError):
    """bind_free_parameter called on a fully concrete density."""


class InvalidParameterValue(CvtAllocError):
    """A density parameter violates its family's domain invariant."""


# --- tessellation ----------------------------------------------------------

class UnsortedGenerators(CvtAllocError):
    """Generators are not strictly increasing."""


class GeneratorOutOfDomain(CvtAllocError):
    """A generator lies outside the open interval (a, b)."""


class DuplicateGenerators(CvtAllocError):
    """Two generators are closer than the degeneracy gap."""


class CellsDoNotTile(CvtAllocError):
    """The given cells overlap or leave gaps."""


class MaxIterationsExceeded(CvtAllocError):
    """Iteration budget exhausted before convergence."""


# --- static allocation -----------------------------------------------------

class InvalidCandidate(CvtAllocError):
    """Solver candidate violates ordering/domain/parameter constraints."""


class SolverDiverged(CvtAllocError):
    """Newton iteration failed to reach the residual tolerance.

    Carries the best iterate found in ``best`` and its norm in
    ``residual_norm`` for diagnostics.
    """

    def __init__(self, message, best=None, residual_norm=None):
        super().__init__(message)
        self.best = best
        self.residual_norm = residual_norm


class InfeasibleProblem(CvtAllocError):
    """The mean allocation r/N is not attainable inside the domain."""


# --- dynamic allocation ----------------------------------------------------

class MissingDesiredInput(CvtAllocError):
    """negotiate_round called without a desired amount for some agent."""


class DomainTooNarrow(CvtAllocError):
    """Domain truncates the Gaussian too much for the shift property."""


# --- thermal ---------------------------------------------------------------

class NonHurwitz(CvtAllocError):
    """Continuous-time A matrix has an eigenvalue with nonnegative real part."""


class Uncontrollable(CvtAllocError):
    """(Ad, Bd) pair is not controllable; pole placement impossible."""
