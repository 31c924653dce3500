"""Exception types shared across pipeline stages."""

from __future__ import annotations


class RareError(Exception):
    """Base class for all pipeline errors."""


class EmptyDocument(RareError):
    pass


class EmptyCorpus(RareError):
    pass


class ProviderUnavailable(RareError):
    """Endpoint kept failing after the configured number of retries."""


class MalformedResponse(RareError):
    pass


class DimensionMismatch(RareError):
    pass


class NoJsonFound(RareError):
    pass


class NoPerturbableToken(RareError):
    pass


class GuardFailed(RareError):
    """A perturbed text did not pass its validity guard and is omitted."""


class ChunkBecameEmpty(RareError):
    pass


class EvidenceNotFound(RareError):
    """A source sentence could not be located in its chunk."""


class IncompleteGrid(RareError):
    pass


class ConfigInvalid(RareError):
    pass


class MissingArtifact(RareError):
    def __init__(self, stage: str, path: str):
        super().__init__(f"missing artifact {path!r}; run stage {stage!r} first")
        self.stage = stage
        self.path = path
