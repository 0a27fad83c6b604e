import numpy as np
import pytest

from whisperwater.audio import ENGINE_RATE, AudioBuffer


def sine(freq, duration=1.0, rate=ENGINE_RATE, amp=1.0):
    t = np.arange(int(duration * rate)) / rate
    return AudioBuffer(amp * np.sin(2 * np.pi * freq * t), rate)


def sawtooth(f0, duration=2.0, rate=ENGINE_RATE, n_harmonics=20, amp=0.5):
    """Band-limited sawtooth: a voiced-speech stand-in with strong harmonics."""
    t = np.arange(int(duration * rate)) / rate
    x = np.zeros_like(t)
    for k in range(1, n_harmonics + 1):
        x += np.sin(2 * np.pi * k * f0 * t) / k
    return AudioBuffer(amp * x / np.abs(x).max(), rate)


@pytest.fixture
def tone_100hz():
    return sine(100.0)
