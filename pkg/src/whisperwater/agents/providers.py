"""Chat and TTS providers.

The seeded mock chat provider and the formant-tone reference TTS keep the
whole pipeline runnable offline; HTTP providers speak the documented wire
contracts and take endpoints/keys from the environment (never logged).
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass
from typing import Iterator, Protocol

import numpy as np

from ..audio import ENGINE_RATE, AudioBuffer
from ..errors import InvalidInput, ProviderError


@dataclass(frozen=True)
class Chunk:
    """One streamed provider chunk: a text delta or the final persona."""

    delta: str | None = None
    done: bool = False
    persona: dict | None = None


class ChatProvider(Protocol):
    def stream(self, system: str, messages: list[dict], max_chars: int) -> Iterator[Chunk]: ...


class TtsProvider(Protocol):
    def synthesize(self, text: str, voice_id: str) -> AudioBuffer: ...


def _digest(*parts: str) -> str:
    h = hashlib.sha256()
    for p in parts:
        h.update(p.encode())
        h.update(b"\x00")
    return h.hexdigest()


_VOICE_POOL = (
    {"voice_id": "river-low", "age_register": "elder", "gender_register": "feminine", "tone": "calm"},
    {"voice_id": "reed-bright", "age_register": "young", "gender_register": "masculine", "tone": "curious"},
    {"voice_id": "mist-soft", "age_register": "adult", "gender_register": "neutral", "tone": "gentle"},
    {"voice_id": "stone-deep", "age_register": "elder", "gender_register": "masculine", "tone": "grave"},
    {"voice_id": "rain-quick", "age_register": "young", "gender_register": "feminine", "tone": "urgent"},
    {"voice_id": "pool-still", "age_register": "adult", "gender_register": "neutral", "tone": "serene"},
)

_REFLECTION_STEMS = (
    "I hear the weight in this",
    "There is an ache beneath these words",
    "Something in this wants to be released",
    "The current of this confession runs deep",
    "What was spoken ripples outward",
    "Beneath the surface something stirs",
)


class MockChatProvider:
    """Deterministic offline stand-in; output is a pure function of the prompt."""

    def __init__(self, agent_id: int, seed: int = 0):
        self.agent_id = agent_id
        self.seed = seed

    def _context_hash(self, system: str, messages: list[dict]) -> str:
        return _digest(str(self.seed), str(self.agent_id), system,
                       json.dumps(messages, sort_keys=True))

    def stream(self, system: str, messages: list[dict], max_chars: int) -> Iterator[Chunk]:
        h = self._context_hash(system, messages)
        prompt = " ".join(m.get("content", "") for m in messages)
        if '"vote"' in prompt:
            choice = int(h[:8], 16) % 6
            yield Chunk(delta=json.dumps({"vote": choice}))
        else:
            stem = _REFLECTION_STEMS[int(h[8:12], 16) % len(_REFLECTION_STEMS)]
            text = f"agent{self.agent_id} reflects: {stem}. [{h[:12]}]"
            for word in text.split(" "):
                yield Chunk(delta=word + " ")
        persona = _VOICE_POOL[int(h[12:16], 16) % len(_VOICE_POOL)]
        yield Chunk(done=True, persona=dict(persona))


class FlakyChatProvider:
    """Test helper: fails the first `failures` calls, then delegates."""

    def __init__(self, inner: ChatProvider, failures: int = 1):
        self.inner = inner
        self.failures = failures
        self.calls = 0

    def stream(self, system: str, messages: list[dict], max_chars: int) -> Iterator[Chunk]:
        self.calls += 1
        if self.calls <= self.failures:
            raise ProviderError("simulated provider failure")
        yield from self.inner.stream(system, messages, max_chars)


class HttpChatProvider:
    """POSTs {system, messages, max_chars}; reads JSON-lines chunks
    {"delta": ...} terminated by {"done": true, "persona": {...}}."""

    def __init__(self, endpoint: str, api_key: str | None = None):
        self.endpoint = endpoint
        self._api_key = api_key

    def stream(self, system: str, messages: list[dict], max_chars: int) -> Iterator[Chunk]:
        import httpx

        headers = {}
        if self._api_key:
            headers["Authorization"] = f"Bearer {self._api_key}"
        payload = {"system": system, "messages": messages, "max_chars": max_chars}
        try:
            with httpx.stream("POST", self.endpoint, json=payload,
                              headers=headers, timeout=60.0) as resp:
                resp.raise_for_status()
                for line in resp.iter_lines():
                    if not line.strip():
                        continue
                    data = json.loads(line)
                    if data.get("done"):
                        yield Chunk(done=True, persona=data.get("persona"))
                        return
                    yield Chunk(delta=data.get("delta", ""))
        except Exception as exc:  # noqa: BLE001
            raise ProviderError(f"chat provider call failed: {exc}") from exc


class ReferenceTtsProvider:
    """Formant-like tone synthesis keyed on (voice_id, text hash).

    60 ms per character at 16 kHz; a fixed per-voice fundamental keeps the
    audio voiced enough for the downstream pitch stage.
    """

    CHAR_SECONDS = 0.06

    def synthesize(self, text: str, voice_id: str) -> AudioBuffer:
        if not text:
            raise InvalidInput("cannot synthesize empty text")
        key = _digest(voice_id, text)
        f0 = 100.0 + int(_digest(voice_id)[:8], 16) % 128       # 100..227 Hz
        rng = np.random.default_rng(int(key[:16], 16))
        seg_len = int(self.CHAR_SECONDS * ENGINE_RATE)
        n = seg_len * len(text)
        t = np.arange(n) / ENGINE_RATE
        # steady harmonic stack for voicing, per-character formant colour
        samples = 0.5 * np.sin(2 * np.pi * f0 * t) + 0.25 * np.sin(2 * np.pi * 2 * f0 * t)
        for i in range(len(text)):
            formant = 300.0 + 2700.0 * rng.random()
            sl = slice(i * seg_len, (i + 1) * seg_len)
            seg_t = t[sl]
            shape = np.hanning(seg_len)
            samples[sl] += 0.15 * shape * np.sin(2 * np.pi * formant * seg_t)
        samples *= 0.8 / np.abs(samples).max()
        return AudioBuffer(samples, ENGINE_RATE)


class HttpTtsProvider:
    """POSTs {text, voice_id}; expects WAV bytes back."""

    def __init__(self, endpoint: str, api_key: str | None = None):
        self.endpoint = endpoint
        self._api_key = api_key

    def synthesize(self, text: str, voice_id: str) -> AudioBuffer:
        if not text:
            raise InvalidInput("cannot synthesize empty text")
        import io

        import httpx
        from scipy.io import wavfile

        headers = {}
        if self._api_key:
            headers["Authorization"] = f"Bearer {self._api_key}"
        try:
            resp = httpx.post(self.endpoint, json={"text": text, "voice_id": voice_id},
                              headers=headers, timeout=60.0)
            resp.raise_for_status()
            rate, data = wavfile.read(io.BytesIO(resp.content))
        except Exception as exc:  # noqa: BLE001
            raise ProviderError(f"TTS provider call failed: {exc}") from exc
        if data.dtype == np.int16:
            data = data.astype(np.float64) / 32768.0
        if data.ndim > 1:
            data = data[:, 0]
        return AudioBuffer(np.asarray(data, dtype=np.float64), int(rate))


CHAT_PROVIDERS = ("mock", "http-openai-style", "http-anthropic-style")
TTS_PROVIDERS = ("reference", "http-tts")


def get_chat_provider(name: str, agent_id: int, seed: int = 0) -> ChatProvider:
    if name == "mock":
        return MockChatProvider(agent_id, seed)
    if name in ("http-openai-style", "http-anthropic-style"):
        suffix = name.rsplit("-", 2)[1].upper()
        endpoint = os.environ.get(f"WW_CHAT_{suffix}_ENDPOINT") or os.environ.get("WW_CHAT_ENDPOINT")
        key = os.environ.get(f"WW_CHAT_{suffix}_KEY") or os.environ.get("WW_CHAT_KEY")
        if not endpoint:
            raise InvalidInput(f"provider {name!r} needs WW_CHAT_ENDPOINT")
        return HttpChatProvider(endpoint, key)
    raise InvalidInput(f"unknown chat provider {name!r}")


def get_tts_provider(name: str) -> TtsProvider:
    if name == "reference":
        return ReferenceTtsProvider()
    if name == "http-tts":
        endpoint = os.environ.get("WW_TTS_ENDPOINT")
        if not endpoint:
            raise InvalidInput("provider 'http-tts' needs WW_TTS_ENDPOINT")
        return HttpTtsProvider(endpoint, os.environ.get("WW_TTS_KEY"))
    raise InvalidInput(f"unknown TTS provider {name!r}")
