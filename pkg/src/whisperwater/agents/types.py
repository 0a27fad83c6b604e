"""Domain types for the six-agent dialogue."""

from __future__ import annotations

from dataclasses import dataclass, field

from ..audio import AudioBuffer
from ..errors import InvalidInput

MAX_UTTERANCE_CHARS = 150
SUMMARIZER_ID = 6

AGE_REGISTERS = ("young", "adult", "elder")
GENDER_REGISTERS = ("feminine", "masculine", "neutral")


@dataclass(frozen=True)
class PersonaDescriptor:
    voice_id: str
    age_register: str
    gender_register: str
    tone: str

    def __post_init__(self):
        if not self.voice_id:
            raise InvalidInput("voice_id must be non-empty")
        if self.age_register not in AGE_REGISTERS:
            raise InvalidInput(f"age_register must be one of {AGE_REGISTERS}")
        if self.gender_register not in GENDER_REGISTERS:
            raise InvalidInput(f"gender_register must be one of {GENDER_REGISTERS}")

    def to_dict(self) -> dict:
        return {
            "voice_id": self.voice_id,
            "age_register": self.age_register,
            "gender_register": self.gender_register,
            "tone": self.tone,
        }


NEUTRAL_PERSONA = PersonaDescriptor(
    voice_id="neutral-voice", age_register="adult", gender_register="neutral", tone="neutral"
)


@dataclass(frozen=True)
class AgentConfig:
    agent_id: int
    provider_name: str = "mock"
    model_hint: str = ""
    system_prompt: str = ""

    def __post_init__(self):
        if not (0 <= self.agent_id <= SUMMARIZER_ID):
            raise InvalidInput("agent_id must be 0..6")


@dataclass
class Utterance:
    agent_id: int
    round: int
    text: str
    persona: PersonaDescriptor
    audio: AudioBuffer | None = None

    def __post_init__(self):
        if len(self.text) > MAX_UTTERANCE_CHARS:
            raise InvalidInput(f"utterance exceeds {MAX_UTTERANCE_CHARS} characters")
        if not (0 <= self.agent_id <= SUMMARIZER_ID):
            raise InvalidInput("agent_id must be 0..6")
        if not (1 <= self.round <= 4):
            raise InvalidInput("round must be 1..4")
        if self.round == 4 and self.agent_id != SUMMARIZER_ID:
            raise InvalidInput("round 4 belongs to the summarizer agent")

    def to_dict(self) -> dict:
        return {
            "agent_id": self.agent_id,
            "round": self.round,
            "text": self.text,
            "persona": self.persona.to_dict(),
        }


@dataclass(frozen=True)
class StreamEvent:
    kind: str               # token | utterance_done | round_done | error
    agent_id: int
    round: int
    payload: str = ""

    def __post_init__(self):
        if self.kind not in ("token", "utterance_done", "round_done", "error"):
            raise InvalidInput(f"unknown event kind {self.kind!r}")
