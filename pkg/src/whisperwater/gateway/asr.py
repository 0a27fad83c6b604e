"""Transcription provider interface.

The reference provider is hermetic: it returns the sidecar transcript file
(`<name>.txt` next to the WAV) when present and errors otherwise. An external
HTTP provider speaks {audio_b64} -> {text}.
"""

from __future__ import annotations

import base64
import os
from pathlib import Path

from ..audio import AudioBuffer, load_wav
from ..errors import AsrUnavailable
from ..ritual import CONFESSION_CAP_SECONDS


def transcribe_sidecar(wav_path: str | Path) -> str:
    sidecar = Path(wav_path).with_suffix(".txt")
    if not sidecar.exists():
        raise AsrUnavailable(f"no sidecar transcript {sidecar} and no external ASR configured")
    return sidecar.read_text().strip()


def transcribe_http(audio: AudioBuffer, endpoint: str) -> str:
    import httpx

    payload = {"audio_b64": base64.b64encode(audio.samples.astype("<f4").tobytes()).decode(),
               "sample_rate": audio.sample_rate}
    try:
        resp = httpx.post(endpoint, json=payload, timeout=60.0)
        resp.raise_for_status()
        return str(resp.json()["text"])
    except Exception as exc:  # noqa: BLE001
        raise AsrUnavailable(f"external ASR failed: {exc}") from exc


def transcribe(wav_path: str | Path, audio: AudioBuffer | None = None) -> str:
    """Sidecar file if present, else the WW_ASR_ENDPOINT provider."""
    sidecar = Path(wav_path).with_suffix(".txt")
    if sidecar.exists():
        return sidecar.read_text().strip()
    endpoint = os.environ.get("WW_ASR_ENDPOINT")
    if not endpoint:
        raise AsrUnavailable(f"no sidecar transcript {sidecar} and no external ASR configured")
    if audio is None:
        audio = load_wav(wav_path)
    cap = int(CONFESSION_CAP_SECONDS * audio.sample_rate)
    if audio.samples.size > cap:
        audio = AudioBuffer(audio.samples[:cap], audio.sample_rate)
    return transcribe_http(audio, endpoint)
