"""Exception hierarchy shared by all modules."""


class PentapodError(Exception):
    """Base class for every error raised by this package."""


class DesignError(PentapodError, ValueError):
    """The design cannot be brought into the canonical frame."""


class NoTriangle(DesignError):
    """All five base points are collinear (trivially architecture singular)."""


class NoDistinctPlatformPair(DesignError):
    """Four or more platform points coincide (trivially architecture singular)."""


class NotUnit(PentapodError, ValueError):
    pass


class DimensionMismatch(PentapodError, ValueError):
    pass


class NotFactorable(PentapodError):
    """The restricted polynomial has a monomial not divisible by the distinguished variable."""


class ArchitectureSingularResult(PentapodError):
    """A synthesized design turned out to be architecture singular."""

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class SynthesisRejected(PentapodError, ValueError):
    """Synthesis parameters violate the geometry required for the requested family."""


class SingularQuery(PentapodError):
    """The query pose already lies on the singularity variety."""


class UnsupportedFamily(PentapodError):
    """The design does not belong to a family with a simplified singularity polynomial."""


class DegenerateRestriction(PentapodError):
    """The restricted singularity polynomial vanishes identically."""


class InfinitePedalSet(PentapodError):
    """The query orientation is a pole of a singular circle: every point of it is a pedal."""


class SingularEliminationMatrix(PentapodError):
    pass


class BudgetExhausted(PentapodError):
    """Fewer distinct critical points than expected were found.

    The partial result list is kept on ``partial``.
    """

    def __init__(self, message, partial=()):
        super().__init__(message)
        self.partial = list(partial)
