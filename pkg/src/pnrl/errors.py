"""Exception types shared across the package."""

from __future__ import annotations


class PnrlError(Exception):
    """Base class for all package errors."""


class InvalidAction(PnrlError):
    """An agent submitted an action outside its action space."""

    def __init__(self, agent_index: int, action, space) -> None:
        self.agent_index = agent_index
        self.action = action
        super().__init__(f"agent {agent_index}: action {action!r} not valid in {space}")


class SteppedAfterDone(PnrlError):
    """step() was called on an episode that already finished."""


class IndexOutOfRange(PnrlError, IndexError):
    """Agent index outside [0, n_agents)."""


class UnknownEnv(PnrlError, KeyError):
    """Environment id not present in the registry."""


class SpaceMismatch(PnrlError):
    """An agent's spaces do not match the seat it was bound to."""


class InvalidObservation(PnrlError):
    """Observation does not conform to the agent's observation space."""


class LengthMismatch(PnrlError, ValueError):
    """Trajectory and value-estimate arrays disagree in length."""


class NonFiniteGradient(PnrlError):
    """A learner update produced non-finite values; the run must abort."""


class NotSupported(PnrlError):
    """Operation not available for this learner kind."""


class UpdatesEnabledInEval(PnrlError):
    """An evaluation-only run was given an agent that would still learn."""


class MissingPartner(PnrlError):
    """A seat has no partner pool bound when the session starts."""


class PersistenceError(PnrlError):
    """Base class for policy/trajectory file errors."""


class ChecksumMismatch(PersistenceError):
    """File bytes fail the integrity check (bad magic, length, or CRC)."""


class VersionUnsupported(PersistenceError):
    """File declares a format version this reader does not know."""


class ShapeMismatch(PersistenceError):
    """Stored parameters do not fit the target spaces."""


class MalformedFile(PersistenceError):
    """File passes the byte-integrity check but is structurally inconsistent."""


class ConfigFieldError:
    """One field-level diagnostic from config validation."""

    __slots__ = ("field", "message")

    def __init__(self, field: str, message: str) -> None:
        self.field = field
        self.message = message

    def __repr__(self) -> str:
        return f"ConfigFieldError({self.field!r}, {self.message!r})"

    def as_dict(self) -> dict:
        return {"field": self.field, "message": self.message}


class InvalidConfig(PnrlError):
    """Config failed validation; carries field-level diagnostics."""

    def __init__(self, errors: list[ConfigFieldError]) -> None:
        self.errors = errors
        lines = "; ".join(f"{e.field}: {e.message}" for e in errors)
        super().__init__(f"invalid config: {lines}")


class UnknownJob(PnrlError, KeyError):
    """Job id not found (or not visible to the calling session)."""


class AlreadyTerminal(PnrlError):
    """cancel() on a job that already reached a terminal state."""


class JobCancelled(PnrlError):
    """Raised inside a worker to unwind a cancelled run."""
