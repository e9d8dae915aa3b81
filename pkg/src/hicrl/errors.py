"""Exception hierarchy shared across the package."""

from __future__ import annotations


class HicrlError(Exception):
    """Base class for all package errors."""


class ParseError(HicrlError):
    """An LLM completion could not be turned into a typed step."""


class BackendError(HicrlError):
    """A completion provider failed in a way that aborts the episode."""


class AuthError(BackendError):
    pass


class BudgetError(BackendError):
    """A prompt does not fit in the available context."""


class TransportError(BackendError):
    """Transient failures persisted past the retry cap."""


class FixtureExhausted(HicrlError):
    """The scripted backend ran out of recorded responses."""


class EpisodeAborted(HicrlError):
    """Raised by the engine when a backend error cuts an episode short.

    The partially completed episode (outcome ``truncated``) travels on
    ``episode`` so callers can still persist it.
    """

    def __init__(self, episode, cause: BaseException):
        super().__init__(f"episode aborted: {type(cause).__name__}: {cause}")
        self.episode = episode
        self.cause = cause


class EnvError(HicrlError):
    pass


class UnknownEnv(EnvError):
    pass


class BadSeed(EnvError):
    pass


class NotReset(EnvError):
    pass


class AlreadyDone(EnvError):
    pass


class CorruptManifest(HicrlError):
    """A run directory cannot be resumed safely."""
