"""Error types shared across the package."""


class RepoError(ValueError):
    """Base class for all domain errors."""


class NotInPlan(RepoError):
    """Frequency or channel index outside the channel plan."""


class UnknownFormat(RepoError):
    """Upload content matches no supported device format."""


class NoOverlap(RepoError):
    """Raw sweep covers no canonical bin center."""


class CampaignNotFound(RepoError):
    pass


class JourneyNotFound(RepoError):
    pass


class InvalidPolygon(RepoError):
    pass


class InvalidBBox(RepoError):
    pass


class InvalidWindow(RepoError):
    pass


class EmptyJourney(RepoError):
    pass


class EmptySamples(RepoError):
    pass


class HashMismatch(RepoError):
    """Two records share a record_id but differ in content."""


class IdMismatch(RepoError):
    """Merge attempted between entities with different ids."""


class IllegalTransition(RepoError):
    """Claim state machine rejected an event.

    Carries the offending (state, event, role) triple.
    """

    def __init__(self, state, event, role):
        super().__init__(f"illegal claim transition: state={state} event={event} role={role}")
        self.state = state
        self.event = event
        self.role = role


class NotCentral(RepoError):
    """Central-only operation invoked on a regional replica."""


class InvalidScenario(RepoError):
    pass


class CorruptSnapshot(RepoError):
    pass


class AuthError(RepoError):
    pass
