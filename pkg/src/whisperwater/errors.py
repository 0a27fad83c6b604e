"""Exception hierarchy shared across the engine."""


class WhisperWaterError(Exception):
    """Base class for all engine errors."""


class InvalidInput(WhisperWaterError):
    """An operation received data violating its preconditions."""


class InvalidConfig(WhisperWaterError):
    """Configuration violates a structural or stability constraint."""


class NoPitch(WhisperWaterError):
    """No voiced fundamental could be found in the signal."""


class Instability(WhisperWaterError):
    """The simulation field crossed the blow-up threshold."""


class ProtocolViolation(WhisperWaterError):
    """An event was delivered to a session in the wrong phase."""


class RoundFailed(WhisperWaterError):
    """Every agent in a dialogue round failed."""


class SealFailed(WhisperWaterError):
    """The session record could not be encrypted."""


class AsrUnavailable(WhisperWaterError):
    """No transcription provider (or sidecar transcript) is available."""


class ProviderError(WhisperWaterError):
    """A chat/TTS/emotion provider call failed."""
