"""Vocal emotion classification and the excitation that primes the water.

The reference classifier is a transparent acoustic heuristic (energy, pitch
statistics, a speaking-rate proxy mapped onto an arousal/valence grid); a
remote model can be plugged in behind the same provider interface.
"""

from __future__ import annotations

import base64
import json
from dataclasses import dataclass
from typing import Protocol

import numpy as np

from .audio import AudioBuffer, resample
from .errors import InvalidInput, NoPitch, ProviderError
from .signal_core import estimate_f0

LABELS = ("angry", "disgusted", "fearful", "happy", "neutral", "sad", "surprised")

BAND_LOW = (20.0, 40.0)
BAND_MID = (50.0, 70.0)
BAND_HIGH = (80.0, 100.0)

# arousal tiering: calm emotions excite the slow band, agitated ones the dense band
LABEL_BANDS = {
    "sad": BAND_LOW,
    "neutral": BAND_LOW,
    "happy": BAND_MID,
    "disgusted": BAND_MID,
    "angry": BAND_HIGH,
    "fearful": BAND_HIGH,
    "surprised": BAND_HIGH,
}

BAND_CHARACTER = {
    BAND_LOW: "slow-undulation",
    BAND_MID: "standing-wave",
    BAND_HIGH: "dense-energetic",
}

CONTEMPLATION_AMPLITUDE = 0.8
FADE_SECONDS = 2.0


@dataclass(frozen=True)
class EmotionScores:
    scores: dict[str, float]
    dominant: str

    def __post_init__(self):
        if set(self.scores) != set(LABELS):
            raise InvalidInput(f"scores must cover exactly the labels {LABELS}")
        vals = np.array([self.scores[l] for l in LABELS])
        if np.any(vals < 0) or abs(vals.sum() - 1.0) > 1e-6:
            raise InvalidInput("scores must be non-negative and sum to 1")
        best = max(self.scores.values())
        expect = min(l for l in LABELS if self.scores[l] == best)
        if self.dominant != expect:
            raise InvalidInput(f"dominant must be {expect!r} (argmax, lexicographic ties)")

    @classmethod
    def from_raw(cls, raw: dict[str, float]) -> "EmotionScores":
        vals = np.array([max(float(raw.get(l, 0.0)), 0.0) for l in LABELS])
        total = vals.sum()
        if total <= 0:
            raise InvalidInput("all-zero emotion scores")
        vals = vals / total
        scores = dict(zip(LABELS, vals.tolist()))
        best = max(scores.values())
        dominant = min(l for l in LABELS if scores[l] == best)
        return cls(scores=scores, dominant=dominant)


@dataclass(frozen=True)
class ExcitationSpec:
    band: tuple[float, float]
    freq: float
    character: str

    def __post_init__(self):
        if self.band not in BAND_CHARACTER:
            raise InvalidInput(f"band {self.band} is not a subwoofer band")
        if not (self.band[0] <= self.freq <= self.band[1]):
            raise InvalidInput("freq must lie inside the band")
        if self.character != BAND_CHARACTER[self.band]:
            raise InvalidInput("character inconsistent with band")


class EmotionProvider(Protocol):
    def classify(self, audio: AudioBuffer) -> EmotionScores: ...


# prototype (valence, arousal) positions per label for the reference heuristic
_PROTOTYPES = {
    "angry": (-0.7, 0.9),
    "disgusted": (-0.6, 0.4),
    "fearful": (-0.5, 0.8),
    "happy": (0.8, 0.6),
    "neutral": (0.0, 0.15),
    "sad": (-0.6, 0.1),
    "surprised": (0.2, 0.85),
}


class ReferenceEmotionProvider:
    """Deterministic acoustic heuristic; zero-energy input maps to neutral."""

    def classify(self, audio: AudioBuffer) -> EmotionScores:
        if audio.duration < 0.5:
            raise InvalidInput("need at least 500 ms of audio to classify")
        x = resample(audio).samples
        rms = float(np.sqrt(np.mean(x * x)))
        if rms < 1e-6:
            raw = {l: (1.0 if l == "neutral" else 0.02) for l in LABELS}
            return EmotionScores.from_raw(raw)

        # energy + speaking-rate proxy -> arousal; pitch height -> valence proxy
        frame = 1600
        n_frames = x.size // frame
        frames = x[: n_frames * frame].reshape(n_frames, frame)
        frame_rms = np.sqrt(np.mean(frames * frames, axis=1))
        active = frame_rms > 0.25 * frame_rms.max()
        rate_proxy = float(np.mean(np.abs(np.diff(active.astype(float))))) if n_frames > 1 else 0.0
        arousal = float(np.clip(6.0 * rms + 3.0 * rate_proxy, 0.0, 1.0))
        try:
            f0 = estimate_f0(audio)
            valence = float(np.clip((f0 - 170.0) / 85.0, -1.0, 1.0))
        except NoPitch:
            valence = -0.2
        d2 = {
            l: (valence - v) ** 2 + (arousal - a) ** 2 for l, (v, a) in _PROTOTYPES.items()
        }
        raw = {l: float(np.exp(-4.0 * d2[l])) for l in LABELS}
        return EmotionScores.from_raw(raw)


class HttpEmotionProvider:
    """POSTs {audio_b64, sample_rate} and expects {scores: {...}} back."""

    def __init__(self, endpoint: str, client=None):
        self.endpoint = endpoint
        self._client = client

    def classify(self, audio: AudioBuffer) -> EmotionScores:
        if audio.duration < 0.5:
            raise InvalidInput("need at least 500 ms of audio to classify")
        import httpx

        payload = {
            "audio_b64": base64.b64encode(audio.samples.astype("<f4").tobytes()).decode(),
            "sample_rate": audio.sample_rate,
        }
        client = self._client or httpx
        try:
            resp = client.post(self.endpoint, json=payload, timeout=30.0)
            resp.raise_for_status()
            scores = resp.json()["scores"]
        except Exception as exc:  # noqa: BLE001 - surface as a provider failure
            raise ProviderError(f"emotion provider call failed: {exc}") from exc
        return EmotionScores.from_raw(scores)


def get_provider(name: str, endpoint: str | None = None) -> EmotionProvider:
    if name == "reference":
        return ReferenceEmotionProvider()
    if name == "external":
        if not endpoint:
            raise InvalidInput("external emotion provider requires an endpoint")
        return HttpEmotionProvider(endpoint)
    raise InvalidInput(f"unknown emotion provider {name!r}")


def classify(audio: AudioBuffer, provider: EmotionProvider | None = None) -> EmotionScores:
    return (provider or ReferenceEmotionProvider()).classify(audio)


def emotion_to_band(scores: EmotionScores) -> ExcitationSpec:
    """Dominant label picks the band; confidence interpolates inside it."""
    band = LABEL_BANDS[scores.dominant]
    confidence = scores.scores[scores.dominant]
    freq = band[0] + confidence * (band[1] - band[0])
    return ExcitationSpec(band=band, freq=freq, character=BAND_CHARACTER[band])


def contemplation_waveform(spec: ExcitationSpec, duration: float, out_rate: int = 8000):
    """Six identical channels: 2 s linear fade-in, then steady 0.8 amplitude."""
    from .signal_core import ChannelWaveform

    if duration <= 0:
        raise InvalidInput("duration must be positive")
    n = int(round(duration * out_rate))
    t = np.arange(n) / out_rate
    envelope = CONTEMPLATION_AMPLITUDE * np.minimum(t / FADE_SECONDS, 1.0)
    samples = envelope * np.sin(2 * np.pi * spec.freq * t)
    return [ChannelWaveform(channel=k + 1, samples=samples.copy(), sample_rate=out_rate) for k in range(6)]
