"""Exception hierarchy for the hub.

Every refusal the hub can issue is a distinct subclass of :class:`HubError`
so callers (API layer, CLI, tests) can match on type; ``code`` mirrors the
class name for wire serialization.
"""


class HubError(Exception):
    """Base class for all domain errors."""

    @property
    def code(self) -> str:
        return type(self).__name__


# graph
class InvalidId(HubError): pass
class DuplicateId(HubError): pass
class UnknownKind(HubError): pass
class UnknownEntity(HubError): pass
class DuplicateEdge(HubError): pass
class SelfLoop(HubError): pass
class UnknownDatum(HubError): pass
class UnknownAuthor(HubError): pass
class UnknownIntervention(HubError): pass
class InvalidValue(HubError): pass


# visibility
class NotAnIndividual(HubError): pass


# rights
class UnknownPrincipal(HubError): pass
class UnknownChannel(HubError): pass
class NoArbiter(HubError): pass
class MultipleArbiters(HubError): pass
class InsufficientAuthority(HubError): pass
class ExpiredOnArrival(HubError): pass
class ExceedsDelegator(HubError): pass
class ArbitrateToSource(HubError): pass


# workflow
class InsufficientRights(HubError): pass
class ProposalInFlight(HubError): pass
class UnknownProposal(HubError): pass
class NotUnderReview(HubError): pass
class DuplicateOpinion(HubError): pass
class SelfReview(HubError): pass
class MissingRationale(HubError): pass
class NotArbiter(HubError): pass
class RateLimited(HubError): pass


# propagation
class UnknownAttribute(HubError): pass
class DuplicatePriority(HubError): pass
class DuplicateRule(HubError): pass
class NonTerminating(HubError): pass
class DerivationTypeError(HubError): pass


# exosource
class NotASource(HubError): pass
class InvalidDictionary(HubError): pass
class UnknownSource(HubError): pass


# federation
class AmbiguousOwnership(HubError): pass
class ScopeMismatch(HubError): pass
class UnknownContract(HubError): pass
class DuplicateContract(HubError): pass
class WrongPeer(HubError): pass
class OwnershipViolation(HubError): pass
class NotInScope(HubError): pass
class PeerUnreachable(HubError): pass


# service
class CorruptLog(HubError): pass
class PortUnavailable(HubError): pass
class SnapshotStale(HubError): pass
