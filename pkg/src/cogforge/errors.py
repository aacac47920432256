"""Exception hierarchy.

Everything raised on purpose derives from :class:`CogforgeError`; the CLI maps
these to exit code 1.
"""


class CogforgeError(Exception):
    """Base class for domain errors."""


# dataset
class SchemaMismatch(CogforgeError):
    pass


class DomainError(CogforgeError, ValueError):
    """A field value is outside its declared range."""


class EmptyDataset(CogforgeError):
    pass


class TooFewParticipants(CogforgeError):
    pass


# models
class ParadigmMismatch(CogforgeError):
    pass


class ArityError(CogforgeError):
    pass


class BoundsError(CogforgeError):
    pass


class LengthMismatch(CogforgeError):
    pass


class UnknownModel(CogforgeError):
    pass


# fitting / comparison
class AllRestartsFailed(CogforgeError):
    pass


class NonFiniteObjective(CogforgeError):
    pass


class ParticipantSetMismatch(CogforgeError):
    pass


class NonFiniteEvidence(CogforgeError):
    pass


# ppc
class MissingLabels(CogforgeError):
    pass


class MissingCorrectMap(CogforgeError):
    pass


# pipeline
class EngineError(CogforgeError):
    pass


class EngineUnreachable(EngineError):
    pass


class RateLimited(EngineError):
    pass


class EmptyResponse(EngineError):
    pass


class NoBlocksFound(CogforgeError):
    pass


class DuplicateParameterSet(CogforgeError):
    pass


class AllComponentsDisabled(CogforgeError):
    pass


class RunAborted(CogforgeError):
    def __init__(self, iteration, cause):
        super().__init__(f"run aborted at iteration {iteration}: {cause}")
        self.iteration = iteration
        self.cause = cause


class ConfigError(CogforgeError):
    pass
