"""Speech-to-wave decomposition.

Pipeline: STFT -> fundamental estimation -> log-spaced six-step harmonic
ladder -> Bark warping -> band assignment over the three subwoofer bands
(20-40, 50-70, 80-100 Hz) -> per-harmonic amplitude envelopes -> band-limited
channel waveforms ready for the tank.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.signal import get_window, lfilter

from .audio import ENGINE_RATE, AudioBuffer, resample
from .errors import InvalidConfig, InvalidInput, NoPitch

FFT_SIZE = 512          # with 16 kHz input: 257 bins spanning 0-8000 Hz
DEFAULT_HOP = 256
N_BINS = FFT_SIZE // 2 + 1
MAX_BIN_HZ = ENGINE_RATE / 2

F0_MIN, F0_MAX = 85.0, 255.0
SEARCH_HZ = (40.0, 500.0)       # raw lag search; result clamped to [85, 255]
VOICING_THRESHOLD = 0.3

BANDS = ((20.0, 40.0), (50.0, 70.0), (80.0, 100.0))
# rank pairs (ascending Bark) -> channel numbers; centre pair gets the low band
RANK_CHANNELS = (3, 4, 2, 5, 1, 6)
RANK_BANDS = (0, 0, 1, 1, 2, 2)

ENVELOPE_TAU = 0.030    # single-pole smoothing time constant, seconds

# Periodic Hamming is COLA at 50% overlap and strictly positive, so the
# overlap-add inverse divides cleanly everywhere and the round trip is exact.
_WINDOW = get_window("hamming", FFT_SIZE, fftbins=True)


@dataclass(frozen=True)
class SpectralFrames:
    """Magnitude/phase frames from the 512-point STFT at 16 kHz."""

    magnitudes: np.ndarray      # (n_frames, 257), non-negative
    phases: np.ndarray          # (n_frames, 257), radians
    bin_freqs: np.ndarray       # 257 values, 0..8000 Hz
    hop_seconds: float

    def __post_init__(self):
        if self.bin_freqs.shape != (N_BINS,):
            raise InvalidConfig(f"expected {N_BINS} bins, got {self.bin_freqs.shape}")
        if self.hop_seconds <= 0:
            raise InvalidConfig("hop_seconds must be positive")

    @property
    def n_frames(self) -> int:
        return self.magnitudes.shape[0]


@dataclass(frozen=True)
class WaveComponent:
    """One carrier: a harmonic mapped into a playable subwoofer band."""

    index: int
    source_freq: float
    bark: float
    channel: int
    band: tuple[float, float]
    target_freq: float
    envelope: np.ndarray
    envelope_rate: float

    def __post_init__(self):
        lo, hi = self.band
        if self.band not in BANDS:
            raise InvalidInput(f"band {self.band} not one of {BANDS}")
        if not (lo <= self.target_freq <= hi):
            raise InvalidInput(f"target {self.target_freq} outside band {self.band}")
        env = np.asarray(self.envelope, dtype=np.float64)
        if env.size and (not np.all(np.isfinite(env)) or env.min() < 0):
            raise InvalidInput("envelope must be finite and non-negative")
        object.__setattr__(self, "envelope", env)


@dataclass(frozen=True)
class WaveSet:
    """The six components derived from one utterance."""

    components: tuple[WaveComponent, ...]
    f0: float
    duration_seconds: float

    def __post_init__(self):
        if len(self.components) != 6:
            raise InvalidInput("WaveSet requires exactly six components")
        channels = sorted(c.channel for c in self.components)
        if channels != [1, 2, 3, 4, 5, 6]:
            raise InvalidInput("channels must be a permutation of 1..6")
        for band in BANDS:
            if sum(1 for c in self.components if c.band == band) != 2:
                raise InvalidInput(f"band {band} must hold exactly two components")
        if self.duration_seconds <= 0:
            raise InvalidInput("duration must be positive")


@dataclass(frozen=True)
class ChannelWaveform:
    channel: int
    samples: np.ndarray
    sample_rate: int


def stft(audio: AudioBuffer, window_len: int = FFT_SIZE, hop: int = DEFAULT_HOP) -> SpectralFrames:
    """Short-time Fourier transform with the 257-bin contract.

    Frame count is floor((len - window_len)/hop) + 1; audio shorter than one
    window is zero-padded to a single frame.
    """
    if audio.samples.size == 0:
        raise InvalidInput("cannot transform empty audio")
    if window_len != FFT_SIZE:
        raise InvalidConfig(f"window_len must be {FFT_SIZE} to keep {N_BINS} bins")
    if hop <= 0 or hop > window_len:
        raise InvalidConfig("hop must be in 1..window_len")
    x = resample(audio).samples
    if x.size < window_len:
        x = np.pad(x, (0, window_len - x.size))
    n_frames = (x.size - window_len) // hop + 1
    idx = np.arange(window_len)[None, :] + hop * np.arange(n_frames)[:, None]
    spectra = np.fft.rfft(x[idx] * _WINDOW, axis=1)
    return SpectralFrames(
        magnitudes=np.abs(spectra),
        phases=np.angle(spectra),
        bin_freqs=np.fft.rfftfreq(window_len, 1.0 / ENGINE_RATE),
        hop_seconds=hop / ENGINE_RATE,
    )


def istft(frames: SpectralFrames, window_len: int = FFT_SIZE, hop: int = DEFAULT_HOP) -> np.ndarray:
    """Overlap-add inverse; exact wherever the window sum is positive."""
    spectra = frames.magnitudes * np.exp(1j * frames.phases)
    chunks = np.fft.irfft(spectra, n=window_len, axis=1)
    n = window_len + hop * (frames.n_frames - 1)
    out = np.zeros(n)
    wsum = np.zeros(n)
    for m in range(frames.n_frames):
        sl = slice(m * hop, m * hop + window_len)
        out[sl] += chunks[m]
        wsum[sl] += _WINDOW
    return out / np.maximum(wsum, 1e-12)


def estimate_f0(audio: AudioBuffer) -> float:
    """Fundamental via normalized autocorrelation, clamped to [85, 255] Hz.

    Raises NoPitch when the best normalized peak stays under the voicing
    threshold (silence, noise).
    """
    x = resample(audio).samples
    if x.size < int(0.1 * ENGINE_RATE):
        raise InvalidInput("need at least 100 ms of audio for pitch estimation")
    x = x - x.mean()
    n = x.size
    # FFT autocorrelation, normalized per-lag by the two windowed energies
    spec = np.fft.rfft(x, 2 * n)
    ac = np.fft.irfft(spec * np.conj(spec))[:n]
    csq = np.concatenate(([0.0], np.cumsum(x * x)))
    lags = np.arange(n)
    e_head = csq[n - lags] - csq[0]
    e_tail = csq[n] - csq[lags]
    nccf = ac / np.maximum(np.sqrt(e_head * e_tail), 1e-12)

    lag_min = int(np.floor(ENGINE_RATE / SEARCH_HZ[1]))
    lag_max = min(int(np.ceil(ENGINE_RATE / SEARCH_HZ[0])), n - 2)
    window = nccf[lag_min : lag_max + 1]
    peak = window.max()
    if peak < VOICING_THRESHOLD:
        raise NoPitch(f"normalized peak {peak:.3f} below {VOICING_THRESHOLD}")
    # shortest lag whose peak is within 5% of the best: avoids octave-down errors
    candidates = np.nonzero(window >= 0.95 * peak)[0]
    best = int(candidates[0]) + lag_min
    # keep to the local maximum around that candidate
    while best + 1 <= lag_max and nccf[best + 1] > nccf[best]:
        best += 1
    while best - 1 >= lag_min and nccf[best - 1] > nccf[best]:
        best -= 1
    a, b, c = nccf[best - 1], nccf[best], nccf[best + 1]
    denom = a - 2 * b + c
    delta = 0.0 if abs(denom) < 1e-12 else 0.5 * (a - c) / denom
    lag = best + float(np.clip(delta, -0.5, 0.5))
    return float(np.clip(ENGINE_RATE / lag, F0_MIN, F0_MAX))


def harmonic_ladder(f0: float) -> np.ndarray:
    """Six log-spaced frequencies from f0 to 8*f0."""
    if f0 <= 0:
        raise InvalidInput(f"f0 must be positive, got {f0}")
    return f0 * 8.0 ** (np.arange(6) / 5.0)


def bark(f):
    """Bark value of a frequency (Hz); accepts scalars or arrays."""
    farr = np.asarray(f, dtype=np.float64)
    if np.any(farr < 0):
        raise InvalidInput("frequency must be non-negative")
    out = 13.0 * np.arctan(0.00076 * farr) + 3.5 * np.arctan((farr / 7500.0) ** 2)
    return float(out) if np.isscalar(f) else out


@dataclass(frozen=True)
class BandAssignment:
    index: int
    channel: int
    band: tuple[float, float]
    target_freq: float
    bark: float


def assign_bands(freqs) -> list[BandAssignment]:
    """Map six frequencies onto channels/bands by ascending Bark rank.

    The two lowest-Bark components go to the centre channels (3, 4) in the
    20-40 Hz band, the middle pair to (2, 5) at 50-70 Hz, the top pair to the
    outer channels (1, 6) at 80-100 Hz. Within each band the target frequency
    interpolates linearly by Bark normalized over the six components.
    """
    freqs = np.asarray(freqs, dtype=np.float64)
    if freqs.shape != (6,):
        raise InvalidInput("assign_bands expects exactly six frequencies")
    if np.any(freqs <= 0):
        raise InvalidInput("frequencies must be positive")
    barks = bark(freqs)
    order = sorted(range(6), key=lambda i: (barks[i], i))
    bmin, bmax = barks.min(), barks.max()
    spread = bmax - bmin
    out: list[BandAssignment | None] = [None] * 6
    for rank, i in enumerate(order):
        lo, hi = BANDS[RANK_BANDS[rank]]
        norm = 0.5 if spread == 0 else (barks[i] - bmin) / spread
        out[i] = BandAssignment(
            index=i,
            channel=RANK_CHANNELS[rank],
            band=(lo, hi),
            target_freq=lo + norm * (hi - lo),
            bark=float(barks[i]),
        )
    return out  # type: ignore[return-value]


def extract_envelope(frames: SpectralFrames, f: float) -> np.ndarray:
    """Per-frame amplitude at frequency f, low-pass smoothed (tau = 30 ms)."""
    if not (0.0 <= f <= MAX_BIN_HZ):
        raise InvalidInput(f"frequency {f} outside 0..{MAX_BIN_HZ}")
    spacing = float(frames.bin_freqs[1] - frames.bin_freqs[0])
    pos = f / spacing
    lo = min(int(np.floor(pos)), N_BINS - 2)
    frac = pos - lo
    raw = (1 - frac) * frames.magnitudes[:, lo] + frac * frames.magnitudes[:, lo + 1]
    a = np.exp(-frames.hop_seconds / ENVELOPE_TAU)
    smoothed, _ = lfilter([1 - a], [1, -a], raw, zi=[a * raw[0]])
    return np.maximum(smoothed, 0.0)


def synthesize_channel(component: WaveComponent, duration: float, out_rate: int = 8000) -> ChannelWaveform:
    """Render one component as envelope(t) * sin(2*pi*target*t), zero phase."""
    if out_rate < 1000:
        raise InvalidInput("out_rate must be at least 1000 Hz")
    if duration <= 0:
        raise InvalidInput("duration must be positive")
    n = int(round(duration * out_rate))
    t = np.arange(n) / out_rate
    env = component.envelope
    if env.size == 0:
        samples = np.zeros(n)
    else:
        env_t = np.arange(env.size) / component.envelope_rate
        resampled = np.interp(t, env_t, env)
        samples = resampled * np.sin(2 * np.pi * component.target_freq * t)
        peak = np.abs(samples).max()
        if peak > 1.0:
            samples = samples / peak
    return ChannelWaveform(channel=component.channel, samples=samples, sample_rate=out_rate)


def decompose_speech(audio: AudioBuffer) -> WaveSet:
    """Full decomposition of voiced audio into the six-component WaveSet."""
    frames = stft(audio)
    f0 = estimate_f0(audio)
    freqs = harmonic_ladder(f0)
    assignments = assign_bands(freqs)
    env_rate = 1.0 / frames.hop_seconds
    components = tuple(
        WaveComponent(
            index=a.index,
            source_freq=float(freqs[a.index]),
            bark=a.bark,
            channel=a.channel,
            band=a.band,
            target_freq=a.target_freq,
            envelope=extract_envelope(frames, min(float(freqs[a.index]), MAX_BIN_HZ)),
            envelope_rate=env_rate,
        )
        for a in assignments
    )
    duration = audio.samples.size / audio.sample_rate
    return WaveSet(components=components, f0=f0, duration_seconds=duration)


def synthesize_waveset(ws: WaveSet, out_rate: int = 8000) -> list[ChannelWaveform]:
    """All six channel waveforms, ordered by channel number."""
    waves = [synthesize_channel(c, ws.duration_seconds, out_rate) for c in ws.components]
    return sorted(waves, key=lambda w: w.channel)


def waveset_to_dict(ws: WaveSet) -> dict:
    """waveset.json payload; component field names are the wire contract."""
    return {
        "f0_hz": ws.f0,
        "duration_seconds": ws.duration_seconds,
        "components": [
            {
                "index": c.index,
                "source_freq_hz": c.source_freq,
                "bark": c.bark,
                "channel": c.channel,
                "band_lo_hz": c.band[0],
                "band_hi_hz": c.band[1],
                "target_freq_hz": c.target_freq,
                "envelope_rate_hz": c.envelope_rate,
            }
            for c in sorted(ws.components, key=lambda c: c.index)
        ],
    }
