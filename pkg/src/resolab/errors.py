"""Exception types shared across the package."""


class ResolabError(Exception):
    """Base class for all package-specific errors."""


class BranchError(ResolabError):
    """arg(z) cannot be represented inside the configured branch window."""


class EigenFailure(ResolabError):
    """Dense eigensolver failed to converge."""


class SingularShift(ResolabError):
    """A shifted matrix (A - z) or (A + B - z) is singular."""


class ZeroOnPath(ResolabError):
    """Determinant underflows on a log-tracking path."""


class NonIntegerWinding(ResolabError):
    """Total argument increment of a closed path is not close to 2*pi*n."""


class BoundaryZero(ResolabError):
    """Determinant nearly vanishes on a search-region boundary."""


class BudgetExceeded(ResolabError):
    """Subdivision depth limit reached while separating zeros."""


class PathTooCloseToResonance(ResolabError):
    """A background sample point sits too close to a located resonance."""


class RealResonanceOnGrid(ResolabError):
    """A real resonance would contribute a delta term on the lambda grid."""


class ProfileTooSteep(ResolabError):
    """Scaling profile violates the sector-argument constraint on the grid."""


class GridTooSmall(ResolabError):
    """Heat-trace box shows boundary sensitivity above tolerance."""


class IllConditionedFit(ResolabError):
    """Least-squares basis for the small-time expansion is ill conditioned."""


class SeriesDivergence(ResolabError):
    """Power series in z failed to decay within the term budget."""


class ConfigError(ResolabError):
    """Experiment configuration failed to parse or validate."""

    def __init__(self, message, location=None):
        super().__init__(message if location is None
                         else f"{message} (at {location})")
        self.location = location


class StiffnessWarning(UserWarning):
    """Scattering integration may be under-resolved for very small h."""
