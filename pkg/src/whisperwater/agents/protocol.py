"""The four-round response protocol.

Round 1: six agents reflect concurrently. Round 2: they vote for one peer.
Round 3: the winner responds. Round 4: a dedicated summarizer reconciles.
"""

from __future__ import annotations

import json
import re
from typing import Callable, Iterator, Sequence

from ..errors import InvalidInput, ProviderError, RoundFailed
from .multiplex import multiplex
from .providers import ChatProvider, TtsProvider
from .types import (
    MAX_UTTERANCE_CHARS,
    NEUTRAL_PERSONA,
    SUMMARIZER_ID,
    AgentConfig,
    PersonaDescriptor,
    StreamEvent,
    Utterance,
)

VOTE_INSTRUCTION = (
    'Choose the agent whose reflection most deserves a response. '
    'You may not choose yourself. Reply only with JSON {"vote": <agent_id>}.'
)
SELF_VOTE_NOTICE = "Your previous vote chose yourself, which is not allowed. Vote again for a peer."
PERSONA_RETRY = (
    "Your persona JSON was missing or invalid. Repeat your reply and end with a valid persona "
    "(voice_id, age_register, gender_register, tone)."
)
FALLBACK_TEXT = "…"


def truncate_text(text: str, limit: int = MAX_UTTERANCE_CHARS) -> str:
    """Cap at `limit` characters, cutting at the last whitespace before it."""
    if len(text) <= limit:
        return text
    head = text[:limit]
    cut = max(head.rfind(" "), head.rfind("\n"), head.rfind("\t"))
    return head[:cut].rstrip() if cut > 0 else head


def parse_persona(data) -> PersonaDescriptor | None:
    if not isinstance(data, dict):
        return None
    try:
        return PersonaDescriptor(
            voice_id=str(data["voice_id"]),
            age_register=str(data["age_register"]),
            gender_register=str(data["gender_register"]),
            tone=str(data.get("tone", "neutral")),
        )
    except (KeyError, InvalidInput, TypeError):
        return None


def _consume(provider: ChatProvider, system: str, messages: list[dict],
             emit: Callable[[str], None] | None = None):
    """Run one provider call to completion; returns (raw_text, persona_raw)."""
    parts: list[str] = []
    persona = None
    for chunk in provider.stream(system, messages, MAX_UTTERANCE_CHARS):
        if chunk.delta:
            parts.append(chunk.delta)
            if emit:
                emit(chunk.delta)
        if chunk.done and chunk.persona is not None:
            persona = chunk.persona
    return "".join(parts).strip(), persona


def _resolve_persona(provider: ChatProvider, system: str, messages: list[dict],
                     persona_raw) -> PersonaDescriptor:
    persona = parse_persona(persona_raw)
    if persona is not None:
        return persona
    try:
        _, retry_raw = _consume(provider, system, messages + [{"role": "user", "content": PERSONA_RETRY}])
        persona = parse_persona(retry_raw)
    except ProviderError:
        persona = None
    return persona if persona is not None else NEUTRAL_PERSONA


def _reflection_messages(confession_text: str) -> list[dict]:
    return [{
        "role": "user",
        "content": (
            "A participant confessed to the water:\n"
            f"{confession_text}\n"
            "Reflect on this in at most 150 characters."
        ),
    }]


def round1_reflect(
    confession_text: str,
    agents: Sequence[AgentConfig],
    providers: dict[int, ChatProvider],
) -> tuple[list[Utterance], list[StreamEvent]]:
    """Six concurrent reflections; tolerates per-agent failures."""
    if not confession_text.strip():
        raise InvalidInput("confession text must be non-empty")
    if len(agents) != 6 or len({a.agent_id for a in agents}) != 6:
        raise InvalidInput("round 1 needs six agents with distinct ids")
    messages = _reflection_messages(confession_text)
    results: dict[int, tuple[str, object]] = {}

    def source(cfg: AgentConfig) -> Iterator[StreamEvent]:
        provider = providers[cfg.agent_id]
        text, persona_raw = _consume(provider, cfg.system_prompt, messages)
        for tok in _tokenize(text):
            yield StreamEvent("token", cfg.agent_id, 1, tok)
        results[cfg.agent_id] = (text, persona_raw)
        yield StreamEvent("utterance_done", cfg.agent_id, 1, truncate_text(text))

    events = list(multiplex(
        [source(a) for a in agents],
        on_error=lambda i, exc: StreamEvent("error", agents[i].agent_id, 1, str(exc)),
    ))
    utterances = []
    for cfg in sorted(agents, key=lambda a: a.agent_id):
        if cfg.agent_id not in results:
            continue
        text, persona_raw = results[cfg.agent_id]
        persona = _resolve_persona(providers[cfg.agent_id], cfg.system_prompt, messages, persona_raw)
        utterances.append(Utterance(agent_id=cfg.agent_id, round=1,
                                    text=truncate_text(text), persona=persona))
    if not utterances:
        raise RoundFailed("every agent failed in round 1")
    events.append(StreamEvent("round_done", -1, 1))
    return utterances, events


def _tokenize(text: str) -> list[str]:
    return [t for t in re.split(r"(?<= )", text) if t]


def _parse_vote(text: str) -> int | None:
    match = re.search(r"\{[^{}]*\}", text)
    if not match:
        return None
    try:
        data = json.loads(match.group(0))
        vote = data["vote"]
    except (json.JSONDecodeError, KeyError, TypeError):
        return None
    if isinstance(vote, bool) or not isinstance(vote, int) or not (0 <= vote <= 5):
        return None
    return vote


def tally_votes(votes: Sequence[int]) -> int:
    """Plurality winner; ties break to the lowest agent id; empty -> 0."""
    if not votes:
        return 0
    counts: dict[int, int] = {}
    for v in votes:
        counts[v] = counts.get(v, 0) + 1
    top = max(counts.values())
    return min(v for v, c in counts.items() if c == top)


def round2_select(
    round1: Sequence[Utterance],
    agents: Sequence[AgentConfig],
    providers: dict[int, ChatProvider],
) -> tuple[int, dict[int, int | None], list[StreamEvent]]:
    """Concurrent vote collection; self-votes get one re-ask, then drop."""
    transcript = "\n".join(f"agent{u.agent_id}: {u.text}" for u in round1)
    votes: dict[int, int | None] = {}

    def collect(cfg: AgentConfig) -> Iterator[StreamEvent]:
        messages = [{"role": "user", "content": f"Reflections so far:\n{transcript}\n{VOTE_INSTRUCTION}"}]
        provider = providers[cfg.agent_id]
        text, _ = _consume(provider, cfg.system_prompt, messages)
        vote = _parse_vote(text)
        if vote == cfg.agent_id:
            retry = messages + [{"role": "user", "content": SELF_VOTE_NOTICE}]
            text, _ = _consume(provider, cfg.system_prompt, retry)
            vote = _parse_vote(text)
            if vote == cfg.agent_id:
                vote = None
        votes[cfg.agent_id] = vote
        yield StreamEvent("utterance_done", cfg.agent_id, 2, json.dumps({"vote": vote}))

    events = list(multiplex(
        [collect(a) for a in agents],
        on_error=lambda i, exc: StreamEvent("error", agents[i].agent_id, 2, str(exc)),
    ))
    valid = [v for v in votes.values() if v is not None]
    winner = tally_votes(valid)
    events.append(StreamEvent("round_done", -1, 2))
    return winner, votes, events


def _respond_once(provider: ChatProvider, cfg: AgentConfig, messages: list[dict],
                  round_no: int, agent_id: int) -> Utterance:
    text, persona_raw = _consume(provider, cfg.system_prompt, messages)
    persona = _resolve_persona(provider, cfg.system_prompt, messages, persona_raw)
    return Utterance(agent_id=agent_id, round=round_no, text=truncate_text(text), persona=persona)


def _with_retry(provider: ChatProvider, cfg: AgentConfig, messages: list[dict],
                round_no: int, agent_id: int) -> Utterance:
    for attempt in range(2):
        try:
            return _respond_once(provider, cfg, messages, round_no, agent_id)
        except ProviderError:
            if attempt == 1:
                return Utterance(agent_id=agent_id, round=round_no,
                                 text=FALLBACK_TEXT, persona=NEUTRAL_PERSONA)
    raise AssertionError("unreachable")


def round3_respond(
    winner: int,
    confession_text: str,
    round1: Sequence[Utterance],
    agents: Sequence[AgentConfig],
    providers: dict[int, ChatProvider],
) -> Utterance:
    cfg = next(a for a in agents if a.agent_id == winner)
    transcript = "\n".join(f"agent{u.agent_id}: {u.text}" for u in round1)
    messages = [{
        "role": "user",
        "content": (
            f"The confession:\n{confession_text}\n"
            f"The reflections:\n{transcript}\n"
            f"You (agent{winner}) were selected by your peers to respond to the emerging "
            "discourse. Respond in at most 150 characters."
        ),
    }]
    return _with_retry(providers[winner], cfg, messages, 3, winner)


def round4_summarize(
    confession_text: str,
    round1: Sequence[Utterance],
    votes: dict[int, int | None],
    response: Utterance,
    summarizer: AgentConfig,
    provider: ChatProvider,
) -> Utterance:
    if summarizer.agent_id != SUMMARIZER_ID:
        raise InvalidInput("summarizer must use the dedicated agent id 6")
    lines = [f"agent{u.agent_id}: {u.text}" for u in round1]
    lines.append("votes: " + json.dumps({str(k): v for k, v in sorted(votes.items())}))
    lines.append(f"agent{response.agent_id} (selected): {response.text}")
    messages = [{
        "role": "user",
        "content": (
            f"The confession:\n{confession_text}\n"
            "The dialogue so far:\n" + "\n".join(lines) + "\n"
            "Synthesize all of this into one concluding statement of at most 150 characters."
        ),
    }]
    return _with_retry(provider, summarizer, messages, 4, SUMMARIZER_ID)


def synthesize_tts(utterance: Utterance, provider: TtsProvider) -> Utterance:
    """Attach synthesized audio; raises on empty text or provider failure."""
    if not utterance.text:
        raise InvalidInput("utterance has no text to synthesize")
    audio = provider.synthesize(utterance.text, utterance.persona.voice_id)
    return Utterance(agent_id=utterance.agent_id, round=utterance.round,
                     text=utterance.text, persona=utterance.persona, audio=audio)


def run_dialogue(
    confession_text: str,
    agents: Sequence[AgentConfig],
    summarizer: AgentConfig,
    providers: dict[int, ChatProvider],
    tts: TtsProvider | None = None,
    repeats_2_3: int = 1,
) -> tuple[list[Utterance], dict[int, int | None], list[StreamEvent]]:
    """Full four-round protocol; returns (transcript, votes, events)."""
    round1, events = round1_reflect(confession_text, agents, providers)
    transcript = list(round1)
    votes: dict[int, int | None] = {}
    response = None
    for _ in range(max(repeats_2_3, 1)):
        winner, votes, vote_events = round2_select(round1, agents, providers)
        events.extend(vote_events)
        response = round3_respond(winner, confession_text, round1, agents, providers)
        transcript.append(response)
        events.append(StreamEvent("utterance_done", response.agent_id, 3, response.text))
        events.append(StreamEvent("round_done", -1, 3))
    summary = round4_summarize(confession_text, round1, votes, response, summarizer,
                               providers[SUMMARIZER_ID])
    transcript.append(summary)
    events.append(StreamEvent("utterance_done", SUMMARIZER_ID, 4, summary.text))
    events.append(StreamEvent("round_done", -1, 4))
    if tts is not None:
        transcript = [
            synthesize_tts(u, tts) if u.text else u
            for u in transcript
        ]
    return transcript, votes, events
