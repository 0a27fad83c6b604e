"""The four-phase session: Confession -> Contemplation -> Response -> Release.

`advance` is the pure state machine; `RitualCoordinator` drives a whole
session, chaining utterance simulations on a field that carries residue, and
seals the record with authenticated encryption before anything persists.
"""

from __future__ import annotations

import base64
import json
import os
import struct
import uuid
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Callable

import numpy as np
from cryptography.exceptions import InvalidTag
from cryptography.hazmat.primitives.ciphers.aead import AESGCM

from .audio import AudioBuffer
from .errors import ProtocolViolation, RoundFailed, SealFailed
from .sentiment import EmotionScores
from .agents.types import Utterance

CONFESSION_CAP_SECONDS = 15.0
STILLNESS_RMS_M = 1e-6
STILLNESS_TIMEOUT_S = 10.0


class Phase(str, Enum):
    IDLE = "idle"
    CONFESSION = "confession"
    CONTEMPLATION = "contemplation"
    RESPONSE = "response"
    RELEASE = "release"
    COMPLETE = "complete"


@dataclass(frozen=True)
class RitualEvent:
    kind: str
    payload: Any = None


@dataclass
class RitualSession:
    session_id: str = field(default_factory=lambda: uuid.uuid4().hex)
    phase: Phase = Phase.IDLE
    response_round: int = 0
    confession_audio: AudioBuffer | None = None
    confession_text: str | None = None
    emotion: EmotionScores | None = None
    transcript: list[Utterance] = field(default_factory=list)
    votes: dict[int, int | None] = field(default_factory=dict)
    artifacts: dict[str, str] = field(default_factory=dict)
    stillness_reached: bool = False
    sealed: bool = False


def advance(session: RitualSession, event: RitualEvent) -> RitualSession:
    """One legal step along the phase chain; illegal events leave state untouched."""
    kind, phase = event.kind, session.phase
    if phase == Phase.IDLE and kind == "begin":
        session.phase = Phase.CONFESSION
    elif phase == Phase.CONFESSION and kind == "recording-complete":
        audio = event.payload
        if isinstance(audio, AudioBuffer) and audio.duration > CONFESSION_CAP_SECONDS:
            cap = int(CONFESSION_CAP_SECONDS * audio.sample_rate)
            audio = AudioBuffer(audio.samples[:cap], audio.sample_rate)
        if isinstance(audio, AudioBuffer):
            session.confession_audio = audio
        session.phase = Phase.CONTEMPLATION
    elif phase == Phase.CONTEMPLATION and kind == "analysis-complete":
        session.phase = Phase.RESPONSE
        session.response_round = 1
    elif phase == Phase.RESPONSE and kind == "round-complete":
        n = event.payload
        if n != session.response_round:
            raise ProtocolViolation(
                f"round-complete({n}) in round {session.response_round}")
        if n >= 4:
            session.phase = Phase.RELEASE
        else:
            session.response_round = n + 1
    elif phase == Phase.RESPONSE and kind == "response-failed":
        session.phase = Phase.RELEASE
    elif phase == Phase.RELEASE and kind == "stillness-reached":
        session.stillness_reached = True
    elif phase == Phase.RELEASE and kind == "seal-complete":
        session.phase = Phase.COMPLETE
    else:
        raise ProtocolViolation(f"event {kind!r} illegal in phase {phase.value}")
    return session


# ---------------------------------------------------------------- sealing

@dataclass(frozen=True)
class EncryptedRecord:
    session_id: str
    ciphertext: bytes
    nonce: bytes
    key_id: str
    created_at: float


def serialize_session(session: RitualSession) -> bytes:
    """Canonical JSON (sorted keys, UTF-8) of everything worth sealing."""
    confession: dict[str, Any] = {"text": session.confession_text}
    if session.confession_audio is not None:
        confession["audio_b64"] = base64.b64encode(
            session.confession_audio.samples.astype("<f4").tobytes()).decode()
        confession["sample_rate"] = session.confession_audio.sample_rate
    payload = {
        "session_id": session.session_id,
        "confession": confession,
        "transcript": [u.to_dict() for u in session.transcript],
        "votes": {str(k): v for k, v in sorted(session.votes.items())},
        "emotion": session.emotion.scores if session.emotion else None,
    }
    return json.dumps(payload, sort_keys=True, separators=(",", ":"),
                      ensure_ascii=False).encode("utf-8")


def seal_session(session: RitualSession, key: bytes | None,
                 key_id: str = "default", created_at: float = 0.0) -> EncryptedRecord:
    """Encrypt the session and scrub every plaintext field from it."""
    if session.phase != Phase.RELEASE:
        raise ProtocolViolation(f"cannot seal in phase {session.phase.value}")
    if not key:
        raise SealFailed("no sealing key configured")
    plaintext = serialize_session(session)
    nonce = os.urandom(12)
    ciphertext = AESGCM(key).encrypt(nonce, plaintext, session.session_id.encode())
    session.confession_audio = None
    session.confession_text = None
    session.transcript = []
    session.votes = {}
    session.emotion = None
    session.sealed = True
    advance(session, RitualEvent("seal-complete"))
    return EncryptedRecord(session_id=session.session_id, ciphertext=ciphertext,
                           nonce=nonce, key_id=key_id, created_at=created_at)


def decrypt_record(record: EncryptedRecord, key: bytes) -> bytes:
    try:
        return AESGCM(key).decrypt(record.nonce, record.ciphertext,
                                   record.session_id.encode())
    except InvalidTag as exc:
        raise SealFailed("authentication failed: record tampered or wrong key") from exc


WWR_MAGIC = b"WWR1"


def write_record(path: str | Path, record: EncryptedRecord) -> None:
    with open(path, "wb") as fh:
        fh.write(WWR_MAGIC)
        for blob in (record.session_id.encode(), record.key_id.encode(), record.nonce):
            fh.write(struct.pack("<I", len(blob)))
            fh.write(blob)
        fh.write(struct.pack("<d", record.created_at))
        fh.write(record.ciphertext)


def read_record(path: str | Path) -> EncryptedRecord:
    with open(path, "rb") as fh:
        if fh.read(4) != WWR_MAGIC:
            raise SealFailed(f"{path}: not a WWR1 record")
        blobs = []
        for _ in range(3):
            (n,) = struct.unpack("<I", fh.read(4))
            blobs.append(fh.read(n))
        (created_at,) = struct.unpack("<d", fh.read(8))
        ciphertext = fh.read()
    return EncryptedRecord(session_id=blobs[0].decode(), key_id=blobs[1].decode(),
                           nonce=blobs[2], created_at=created_at, ciphertext=ciphertext)


# ---------------------------------------------------------------- coordinator

class RitualCoordinator:
    """Runs one full session against the engine modules.

    `emit(kind, payload)` receives phase changes, utterances, frames, and the
    seal notice; the gateway wraps these into its event stream.
    """

    def __init__(self, tank_config=None, agents=None, summarizer=None,
                 chat_providers=None, tts_provider=None, emotion_provider=None,
                 seal_key: bytes | None = None, key_id: str = "default",
                 frame_rate: float = 20.0, out_rate: int = 8000,
                 contemplation_seconds: float = 4.0, repeats_2_3: int = 1,
                 emit: Callable[[str, Any], None] | None = None):
        from .agents import AgentConfig, MockChatProvider, ReferenceTtsProvider
        from .sentiment import ReferenceEmotionProvider
        from .watersim import TankConfig

        self.tank_config = tank_config or TankConfig()
        self.agents = agents or [AgentConfig(agent_id=k) for k in range(6)]
        self.summarizer = summarizer or AgentConfig(agent_id=6)
        self.chat_providers = chat_providers or {k: MockChatProvider(k) for k in range(7)}
        self.tts = tts_provider or ReferenceTtsProvider()
        self.emotion_provider = emotion_provider or ReferenceEmotionProvider()
        self.seal_key = seal_key
        self.key_id = key_id
        self.frame_rate = frame_rate
        self.out_rate = out_rate
        self.contemplation_seconds = contemplation_seconds
        self.repeats_2_3 = repeats_2_3
        self.emit = emit or (lambda kind, payload: None)
        # full-session forcing history per channel, for the ch1-6 WAV hand-off
        self.channel_history: list[np.ndarray] = [np.zeros(0) for _ in range(6)]
        self.activity_intervals: dict[str, tuple[float, float]] = {}
        self.summary_waveset = None
        self.frames = []
        self._sim_state = None
        self._sim_t = 0.0

    # -- internals ---------------------------------------------------------

    def _phase(self, session: RitualSession, event: RitualEvent):
        advance(session, event)
        self.emit("phase_changed", {"phase": session.phase.value,
                                    "round": session.response_round})

    def _drive(self, channels, label: str):
        """Simulate six channel waveforms on the shared field, keep history."""
        from . import watersim

        seq, self._sim_state = watersim.run(
            self.tank_config, channels, self.frame_rate, initial=self._sim_state)
        self.frames.extend(seq.frames)
        start = self._sim_t
        duration = channels[0].samples.size / channels[0].sample_rate
        self._sim_t += duration
        self.activity_intervals[label] = (start, self._sim_t)
        ordered = sorted(channels, key=lambda c: c.channel)
        for k in range(6):
            self.channel_history[k] = np.concatenate(
                [self.channel_history[k], ordered[k].samples])
        for fr in seq.frames:
            self.emit("frame", fr)

    def _utterance_channels(self, utterance: Utterance):
        from .signal_core import decompose_speech, synthesize_waveset

        ws = decompose_speech(utterance.audio)
        return ws, synthesize_waveset(ws, self.out_rate)

    # -- phases ------------------------------------------------------------

    def run_contemplation(self, session: RitualSession):
        from .sentiment import contemplation_waveform, emotion_to_band

        audio = session.confession_audio
        if audio is None:
            audio = self.tts.synthesize(session.confession_text or "...", "neutral-voice")
        if audio.duration < 0.5:
            need = int(0.5 * audio.sample_rate) - audio.samples.size
            audio = AudioBuffer(np.pad(audio.samples, (0, need)), audio.sample_rate)
        session.emotion = self.emotion_provider.classify(audio)
        self.emit("emotion", {"scores": session.emotion.scores,
                              "dominant": session.emotion.dominant})
        spec = emotion_to_band(session.emotion)
        channels = contemplation_waveform(spec, self.contemplation_seconds, self.out_rate)
        self._drive(channels, "contemplation")
        self._phase(session, RitualEvent("analysis-complete"))

    def run_response_phase(self, session: RitualSession):
        """Rounds 1-3 sequential on the residual field; round 4 simultaneous."""
        from .agents import (round1_reflect, round2_select, round3_respond,
                             round4_summarize, synthesize_tts)
        from .errors import NoPitch, ProviderError

        if session.phase != Phase.RESPONSE or session.response_round != 1:
            raise ProtocolViolation("response phase must start at round 1")
        confession = session.confession_text or ""

        def speak(utterance: Utterance, label: str):
            try:
                utterance = synthesize_tts(utterance, self.tts)
            except ProviderError:
                return utterance     # audio-less utterances skip the wave stage
            try:
                ws, channels = self._utterance_channels(utterance)
            except NoPitch:
                return utterance
            self._drive(channels, label)
            if utterance.round == 4:
                self.summary_waveset = ws
            return utterance

        try:
            round1, events = round1_reflect(confession, self.agents, self.chat_providers)
        except RoundFailed:
            self._phase(session, RitualEvent("response-failed"))
            return
        for ev in events:
            self.emit("agent_event", ev)
        for i, utt in enumerate(round1):
            utt = speak(utt, f"round1.agent{utt.agent_id}")
            session.transcript.append(utt)
            self.emit("utterance", utt.to_dict())
        self._phase(session, RitualEvent("round-complete", 1))

        response = None
        votes: dict[int, int | None] = {}
        repeats = max(self.repeats_2_3, 1)
        for rep in range(repeats):
            winner, votes, vote_events = round2_select(round1, self.agents, self.chat_providers)
            session.votes = votes
            for ev in vote_events:
                self.emit("agent_event", ev)
            if rep == repeats - 1:
                self._phase(session, RitualEvent("round-complete", 2))
            response = round3_respond(winner, confession, round1, self.agents, self.chat_providers)
            response = speak(response, f"round3.rep{rep}" if repeats > 1 else "round3")
            session.transcript.append(response)
            self.emit("utterance", response.to_dict())
        self._phase(session, RitualEvent("round-complete", 3))

        summary = round4_summarize(confession, round1, votes, response,
                                   self.summarizer, self.chat_providers[6])
        summary = speak(summary, "round4")
        session.transcript.append(summary)
        self.emit("utterance", summary.to_dict())
        self._phase(session, RitualEvent("round-complete", 4))

    def run_release(self, session: RitualSession):
        """Free decay to stillness, then seal."""
        from . import watersim

        cfg = self.tank_config
        if self._sim_state is not None:
            dt = cfg.timestep
            footprints = watersim.source_footprints(cfg)
            steps = int(STILLNESS_TIMEOUT_S / dt)
            zero = np.zeros(6)
            silence = 0
            next_frame_t = self._sim_state.t + 1 / self.frame_rate
            for _ in range(steps):
                self._sim_state = watersim.step(self._sim_state, zero, dt, footprints)
                if self._sim_state.t + 1e-12 >= next_frame_t:
                    fr = watersim.Frame(t=self._sim_state.t,
                                        heightfield=self._sim_state.h_now.copy(),
                                        min=float(self._sim_state.h_now.min()),
                                        max=float(self._sim_state.h_now.max()))
                    self.frames.append(fr)
                    self.emit("frame", fr)
                    next_frame_t += 1 / self.frame_rate
                silence += 1
                if watersim.field_rms(self._sim_state.h_now) < STILLNESS_RMS_M:
                    break
            pad = silence * dt
            n_pad = int(round(pad * self.out_rate))
            for k in range(6):
                self.channel_history[k] = np.concatenate(
                    [self.channel_history[k], np.zeros(n_pad)])
            self._sim_t += pad
        advance(session, RitualEvent("stillness-reached"))
        record = seal_session(session, self.seal_key, self.key_id)
        self.emit("sealed", {"session_id": record.session_id, "key_id": record.key_id})
        self.emit("phase_changed", {"phase": session.phase.value, "round": 0})
        return record

    def run(self, session: RitualSession,
            confession_text: str | None = None,
            confession_audio: AudioBuffer | None = None) -> EncryptedRecord:
        """Drive an idle session end-to-end and return the sealed record."""
        self._phase(session, RitualEvent("begin"))
        session.confession_text = confession_text
        self._phase(session, RitualEvent("recording-complete", confession_audio))
        self.run_contemplation(session)
        self.run_response_phase(session)
        return self.run_release(session)
