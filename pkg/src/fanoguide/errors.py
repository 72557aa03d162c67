"""Exception hierarchy for the fanoguide package."""


class FanoguideError(Exception):
    """Base class for all package errors."""


# --- geometry ---------------------------------------------------------------

class ObstacleOutOfStrip(FanoguideError):
    """An obstacle rectangle violates the strip bounds or the |x| < d box."""


class DisconnectedDomain(FanoguideError):
    """The meshed domain splits into more than one connected component."""


class BumpSupportTooWide(FanoguideError):
    """Wall-bump support reaches |x| >= d."""


class PerturbationCollision(FanoguideError):
    """A perturbation makes an obstacle touch a wall or deform under a bump."""


class MeshTooCoarse(FanoguideError):
    """Target element size cannot resolve a geometric feature."""


# --- linear algebra ---------------------------------------------------------

class SingularMatrix(FanoguideError):
    """Direct factorization broke down (or residual unrecoverable)."""


class SingularAugmentedSystem(FanoguideError):
    """Bordered (deflated) system is singular."""


class MeshMismatch(FanoguideError):
    """Two fields do not live on the same mesh."""


class SegmentNotOnBoundary(FanoguideError):
    """Requested trace segment does not lie on a mesh boundary wall."""


# --- transparent boundary / modal machinery ---------------------------------

class ThresholdDegeneracy(FanoguideError):
    """Spectral parameter sits on a transverse cutoff; DtN is singular."""


class OutOfMonomodeRange(FanoguideError):
    """Spectral parameter outside (0, pi^2)."""


# --- spectral ----------------------------------------------------------------

class NoTrappedMode(FanoguideError):
    """No near-real eigenvalue found in the search interval."""


class SlowDecayViolation(FanoguideError):
    """Trapped mode has (numerically) zero slow-decay amplitude K."""


class NoConvergence(FanoguideError):
    """Eigenvalue iteration failed to converge."""


# --- asymptotics -------------------------------------------------------------

class UnsupportedPerturbation(FanoguideError):
    """Coupling integrals are defined for wall-bump profiles only."""


class DegenerateCoupling(FanoguideError):
    """kappa*alpha - beta vanishes; the slow-resonance expansion degenerates."""


class ZeroBackgroundTransmission(FanoguideError):
    """Background transmission is zero; the circle criterion is undefined."""


class DegenerateCollinear(FanoguideError):
    """Circle fit received (numerically) collinear points."""


# --- mode matching -----------------------------------------------------------

class IllConditionedProjection(FanoguideError):
    """Interface projection system is numerically singular."""


class NonNestedInterface(FanoguideError):
    """Neither side's open cross-section contains the other at an interface."""


# --- sweeps ------------------------------------------------------------------

class NoZeroFound(FanoguideError):
    """|T| minimum stayed above the zero tolerance."""


class NoDipDetected(FanoguideError):
    """Sweep contains no transmission dip."""


class InsufficientPoints(FanoguideError):
    """Not enough samples for the requested study."""
