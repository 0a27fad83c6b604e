"""Command-line surface for the engine."""

from __future__ import annotations

import json
import os
import sys
from pathlib import Path

import click
import numpy as np

from ..audio import AudioBuffer, load_wav, save_wav
from ..errors import WhisperWaterError
from ..ritual import RitualCoordinator, RitualSession, read_record, decrypt_record, write_record
from ..signal_core import decompose_speech, synthesize_waveset, waveset_to_dict
from ..watersim import FrameSequence, write_frames
from .asr import transcribe
from .config import EngineConfig, load_config
from .report import write_report

# deterministic development key, used only under --mock when WW_SEAL_KEY is unset
DEV_SEAL_KEY = bytes.fromhex("ab" * 32)


def _seal_key(mock: bool) -> bytes | None:
    raw = os.environ.get("WW_SEAL_KEY")
    if raw:
        return bytes.fromhex(raw)
    return DEV_SEAL_KEY if mock else None


def _providers(cfg: EngineConfig, mock: bool):
    from ..agents import get_chat_provider, get_tts_provider, MockChatProvider
    from ..sentiment import get_provider as get_emotion_provider

    if mock:
        chat = {k: MockChatProvider(k) for k in range(7)}
        from ..agents import ReferenceTtsProvider
        from ..sentiment import ReferenceEmotionProvider

        return chat, ReferenceTtsProvider(), ReferenceEmotionProvider()
    chat = {a.agent_id: get_chat_provider(a.provider_name, a.agent_id) for a in cfg.agents}
    tts = get_tts_provider(cfg.tts_provider)
    emotion = get_emotion_provider(cfg.emotion_provider, os.environ.get("WW_EMOTION_ENDPOINT"))
    return chat, tts, emotion


@click.group()
def main():
    """Whispering-water engine: confession to cymatic pattern."""


@main.command()
@click.option("--input", "input_path", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--config", "config_path", type=click.Path(exists=True, path_type=Path))
@click.option("--mock", is_flag=True, help="Offline run with seeded mock providers.")
@click.option("--frames", "want_frames", is_flag=True, help="Write the frames file and report.")
@click.option("--out", "out_dir", type=click.Path(path_type=Path), default=None)
@click.option("--unsafe-plaintext", is_flag=True,
              help="With --mock: also write the plaintext transcript.")
def run(input_path, config_path, mock, want_frames, out_dir, unsafe_plaintext):
    """Run a full ritual session from a WAV or text confession."""
    try:
        cfg = load_config(config_path)
        out = Path(out_dir) if out_dir else Path(cfg.output_dir)
        out.mkdir(parents=True, exist_ok=True)

        confession_audio = None
        if input_path.suffix.lower() == ".wav":
            confession_audio = load_wav(input_path)
            confession_text = transcribe(input_path, confession_audio)
        else:
            confession_text = input_path.read_text().strip()

        chat, tts, emotion = _providers(cfg, mock)
        utterances = []
        coord = RitualCoordinator(
            tank_config=cfg.tank,
            agents=[a for a in cfg.agents if a.agent_id < 6],
            summarizer=next(a for a in cfg.agents if a.agent_id == 6),
            chat_providers=chat, tts_provider=tts, emotion_provider=emotion,
            seal_key=_seal_key(mock), key_id=cfg.key_id,
            frame_rate=cfg.frame_rate, out_rate=cfg.out_rate,
            contemplation_seconds=cfg.contemplation_seconds,
            repeats_2_3=cfg.rounds_2_3_repeats,
            emit=lambda kind, payload: utterances.append(payload) if kind == "utterance" else None,
        )
        session = RitualSession()
        record = coord.run(session, confession_text=confession_text,
                           confession_audio=confession_audio)

        for k in range(6):
            save_wav(out / f"ch{k + 1}.wav",
                     AudioBuffer(np.clip(coord.channel_history[k], -1, 1), cfg.out_rate))
        if coord.summary_waveset is not None:
            (out / "waveset.json").write_text(
                json.dumps(waveset_to_dict(coord.summary_waveset), indent=2))
        if want_frames:
            seq = FrameSequence(frames=tuple(coord.frames), frame_rate=cfg.frame_rate)
            write_frames(out / "frames.wwf", seq)
            write_report(out, seq)
        if mock and unsafe_plaintext:
            (out / "transcript.json").write_text(json.dumps(utterances, indent=2))
        if cfg.retain_sealed:
            sessions_dir = out / "sessions"
            sessions_dir.mkdir(exist_ok=True)
            write_record(sessions_dir / f"{record.session_id}.wwr", record)
        click.echo(f"session {record.session_id} complete; artifacts in {out}")
    except WhisperWaterError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)


@main.command()
@click.option("--input", "input_path", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--out", "out_dir", type=click.Path(path_type=Path), default=Path("out"))
def decompose(input_path, out_dir):
    """Decompose one WAV into waveset.json and the six channel WAVs."""
    try:
        audio = load_wav(input_path)
        ws = decompose_speech(audio)
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "waveset.json").write_text(json.dumps(waveset_to_dict(ws), indent=2))
        for wf in synthesize_waveset(ws):
            save_wav(out / f"ch{wf.channel}.wav", AudioBuffer(wf.samples, wf.sample_rate))
        click.echo(f"f0={ws.f0:.2f} Hz; waveset written to {out}")
    except WhisperWaterError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)


@main.command()
@click.option("--channels", "channels_dir", required=True,
              type=click.Path(exists=True, path_type=Path))
@click.option("--config", "config_path", type=click.Path(exists=True, path_type=Path))
@click.option("--out", "out_dir", type=click.Path(path_type=Path), default=Path("out"))
@click.option("--frames-png", is_flag=True, help="Also write per-frame PNGs.")
def simulate(channels_dir, config_path, out_dir, frames_png):
    """Simulate the tank from ch1..ch6 WAV files."""
    try:
        from ..signal_core import ChannelWaveform
        from ..watersim import run as run_sim

        cfg = load_config(config_path)
        channels = []
        for k in range(1, 7):
            path = Path(channels_dir) / f"ch{k}.wav"
            if not path.exists():
                raise WhisperWaterError(f"missing channel file {path}")
            buf = load_wav(path, target_rate=None)
            channels.append(ChannelWaveform(channel=k, samples=buf.samples,
                                            sample_rate=buf.sample_rate))
        seq, _ = run_sim(cfg.tank, channels, cfg.frame_rate)
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_frames(out / "frames.wwf", seq)
        write_report(out, seq, pngs=frames_png)
        click.echo(f"{len(seq.frames)} frames written to {out}")
    except WhisperWaterError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)


@main.group()
def wwr():
    """Maintenance commands for sealed session records."""


@wwr.command("decrypt")
@click.argument("record_path", type=click.Path(exists=True, path_type=Path))
def wwr_decrypt(record_path):
    """Decrypt a .wwr record with the key from WW_SEAL_KEY (hex)."""
    try:
        raw = os.environ.get("WW_SEAL_KEY")
        if not raw:
            raise WhisperWaterError("WW_SEAL_KEY not set")
        record = read_record(record_path)
        plaintext = decrypt_record(record, bytes.fromhex(raw))
        click.echo(plaintext.decode("utf-8"))
    except WhisperWaterError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True, path_type=Path))
@click.option("--host", default="127.0.0.1")
@click.option("--port", default=8765, type=int)
@click.option("--mock", is_flag=True)
def serve(config_path, host, port, mock):
    """Serve the session API (JSON-lines event streaming)."""
    import uvicorn

    from .service import create_app

    cfg = load_config(config_path)
    uvicorn.run(create_app(cfg, mock=mock), host=host, port=port)


if __name__ == "__main__":
    main()
