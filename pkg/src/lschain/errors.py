"""Exception hierarchy for the block-diagonalization toolkit."""


class LSChainError(Exception):
    """Base class for all errors raised by this package."""


class SupportError(LSChainError):
    """An operator support is not contained in the requested target interval."""


class SingularRestrictionError(LSChainError):
    """The restriction of ``G - E - z`` to the excited subspace is numerically singular.

    Usually means the coupling lies outside the disk where the gap is controlled.
    """


class NonConvergenceError(LSChainError):
    """A truncated series did not reach its tail tolerance within the allowed order."""


class OutOfDiskError(LSChainError):
    """A majorant was evaluated outside its disk of convergence."""


class DimensionCapError(LSChainError):
    """A dense object would exceed the configured dimension cap."""


class PreconditionError(LSChainError):
    """An input violates the contract of the called operation."""


class DegenerateGroundStateError(LSChainError):
    """The on-site Hamiltonian has no isolated lowest eigenvalue."""


class RootBracketError(LSChainError):
    """The root of the radius equation could not be bracketed."""


class MatrixOverflowError(LSChainError, OverflowError):
    """A matrix exponential produced non-finite entries."""


class SeriesDivergenceError(LSChainError):
    """The Neumann expansion of the reduced resolvent diverged."""
