from .types import AgentConfig, PersonaDescriptor, StreamEvent, Utterance, NEUTRAL_PERSONA
from .multiplex import multiplex
from .providers import (
    Chunk,
    MockChatProvider,
    ReferenceTtsProvider,
    get_chat_provider,
    get_tts_provider,
)
from .protocol import (
    round1_reflect,
    round2_select,
    round3_respond,
    round4_summarize,
    run_dialogue,
    synthesize_tts,
    truncate_text,
)

__all__ = [
    "AgentConfig", "PersonaDescriptor", "StreamEvent", "Utterance", "NEUTRAL_PERSONA",
    "multiplex", "Chunk", "MockChatProvider", "ReferenceTtsProvider",
    "get_chat_provider", "get_tts_provider",
    "round1_reflect", "round2_select", "round3_respond", "round4_summarize",
    "run_dialogue", "synthesize_tts", "truncate_text",
]
