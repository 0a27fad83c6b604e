"""Audio buffers and RIFF WAV input/output.

All DSP in the engine runs at 16 kHz mono; `load_wav` resamples on read.
Writing supports PCM 16-bit and IEEE float 32-bit.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.io import wavfile
from scipy.signal import resample_poly

from .errors import InvalidInput

ENGINE_RATE = 16_000


@dataclass(frozen=True)
class AudioBuffer:
    """Mono audio: samples in [-1, 1] plus a sample rate in Hz."""

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        object.__setattr__(self, "samples", samples)
        if self.sample_rate <= 0:
            raise InvalidInput(f"sample_rate must be positive, got {self.sample_rate}")
        if samples.ndim != 1:
            raise InvalidInput("AudioBuffer expects a 1-D sample array")
        if samples.size and not np.all(np.isfinite(samples)):
            raise InvalidInput("audio contains non-finite samples")

    @property
    def duration(self) -> float:
        return self.samples.size / self.sample_rate


def resample(audio: AudioBuffer, target_rate: int = ENGINE_RATE) -> AudioBuffer:
    """Windowed-sinc (polyphase) resampling; identity when rates already match."""
    if audio.sample_rate == target_rate:
        return audio
    from math import gcd

    g = gcd(target_rate, audio.sample_rate)
    up, down = target_rate // g, audio.sample_rate // g
    out = resample_poly(audio.samples, up, down, window=("kaiser", 5.0))
    return AudioBuffer(out, target_rate)


def load_wav(path: str | Path, target_rate: int | None = ENGINE_RATE) -> AudioBuffer:
    """Read a WAV file (PCM16 or float32); keeps the first channel of multichannel."""
    rate, data = wavfile.read(str(path))
    if data.ndim > 1:
        data = data[:, 0]
    if data.dtype == np.int16:
        samples = data.astype(np.float64) / 32768.0
    elif data.dtype == np.int32:
        samples = data.astype(np.float64) / 2147483648.0
    elif data.dtype in (np.float32, np.float64):
        samples = data.astype(np.float64)
    elif data.dtype == np.uint8:
        samples = (data.astype(np.float64) - 128.0) / 128.0
    else:
        raise InvalidInput(f"unsupported WAV sample format {data.dtype}")
    if samples.size == 0:
        raise InvalidInput(f"{path}: empty WAV file")
    buf = AudioBuffer(np.clip(samples, -1.0, 1.0), int(rate))
    if target_rate is not None:
        buf = resample(buf, target_rate)
    return buf


def save_wav(path: str | Path, audio: AudioBuffer, fmt: str = "float32") -> None:
    """Write mono WAV; fmt is 'float32' (IEEE float) or 'pcm16'."""
    if fmt == "float32":
        wavfile.write(str(path), audio.sample_rate, audio.samples.astype(np.float32))
    elif fmt == "pcm16":
        scaled = np.clip(audio.samples, -1.0, 1.0) * 32767.0
        wavfile.write(str(path), audio.sample_rate, scaled.astype(np.int16))
    else:
        raise InvalidInput(f"unknown WAV format {fmt!r}")
