"""Acceptance gate: one test per shipping criterion, one printed verdict each.

Run with `pytest tests/test_acceptance.py -s` to see the verdict lines inline.
"""

import contextlib
import dataclasses
import json
import random
import socket
import time

import numpy as np
import pytest
from click.testing import CliRunner

from whisperwater.agents import (AgentConfig, MockChatProvider, multiplex,
                                 run_dialogue, truncate_text)
from whisperwater.audio import AudioBuffer, save_wav
from whisperwater.errors import NoPitch, SealFailed
from whisperwater.gateway.cli import main
from whisperwater.ritual import decrypt_record, read_record
from whisperwater.sentiment import (BAND_HIGH, BAND_LOW, BAND_MID,
                                    CONTEMPLATION_AMPLITUDE, FADE_SECONDS,
                                    LABELS, EmotionScores, contemplation_waveform,
                                    emotion_to_band)
from whisperwater.signal_core import (bark, decompose_speech, estimate_f0,
                                      harmonic_ladder, istft, stft,
                                      synthesize_waveset)
from whisperwater import watersim
from whisperwater.watersim import TankConfig, init_tank, source_footprints, step


@contextlib.contextmanager
def criterion(name):
    try:
        yield
    except BaseException:
        print(f"[acceptance] {name}: FAIL")
        raise
    print(f"[acceptance] {name}: PASS")


def _voiced(f0, duration=1.0, rate=16000, n_harm=20):
    t = np.arange(int(duration * rate)) / rate
    x = sum(np.sin(2 * np.pi * f0 * k * t) / k for k in range(1, n_harm + 1))
    return AudioBuffer(0.5 * x / np.abs(x).max(), rate)


def test_harmonic_ladder_identity():
    with criterion("harmonic ladder"):
        rng = np.random.default_rng(7)
        start = time.perf_counter()
        for f0 in rng.uniform(85.0, 255.0, size=1000):
            ladder = harmonic_ladder(f0)
            expected = f0 * 8.0 ** (np.arange(6) / 5.0)
            assert np.allclose(ladder, expected, rtol=1e-12)
            assert abs(ladder[5] - 8.0 * f0) < 1e-9
        assert time.perf_counter() - start < 1.0


def test_bark_scale():
    with criterion("critical-band scale"):
        assert abs(bark(100.0) - 0.9867265581717048) < 1e-3
        assert abs(bark(1000.0) - 8.510531510721993) < 1e-6
        assert bark(0.0) == 0.0
        freqs = np.linspace(1.0, 8000.0, 4000)
        assert np.all(np.diff(bark(freqs)) > 0)


def test_stft_contract():
    with criterion("STFT contract"):
        rng = np.random.default_rng(11)
        audio = AudioBuffer(rng.standard_normal(16000) * 0.1, 16000)
        frames = stft(audio)
        assert frames.magnitudes.shape[1] == 257
        assert frames.n_frames == 61
        assert frames.bin_freqs[0] == 0.0 and frames.bin_freqs[-1] == 8000.0
        for _ in range(10):
            n = 512 + 256 * int(rng.integers(10, 60))
            x = rng.standard_normal(n) * 0.3
            y = istft(stft(AudioBuffer(x, 16000)))
            assert np.max(np.abs(y[:n] - x)) < 1e-6


def test_band_residence():
    with criterion("band residence"):
        rng = np.random.default_rng(23)
        for f0 in rng.uniform(88.0, 250.0, size=20):
            ws = decompose_speech(_voiced(f0))
            for wf, comp in zip(synthesize_waveset(ws),
                                sorted(ws.components, key=lambda c: c.channel)):
                spec = np.abs(np.fft.rfft(wf.samples * np.hanning(wf.samples.size))) ** 2
                freqs = np.fft.rfftfreq(wf.samples.size, 1.0 / wf.sample_rate)
                lo, hi = comp.band
                in_band = spec[(freqs >= lo - 2.0) & (freqs <= hi + 2.0)].sum()
                assert in_band / spec.sum() >= 0.90


def test_pitch_estimation():
    with criterion("pitch estimation"):
        for f0 in (90.0, 120.0, 180.0, 250.0):
            assert abs(estimate_f0(_voiced(f0)) - f0) <= 2.0
        assert estimate_f0(_voiced(60.0)) == 85.0
        rng = np.random.default_rng(5)
        with pytest.raises(NoPitch):
            estimate_f0(AudioBuffer(rng.standard_normal(16000) * 0.1, 16000))


def test_watersim_physics():
    with criterion("tank dynamics"):
        cfg = TankConfig(grid_nx=128, grid_ny=22)
        feet = source_footprints(cfg)
        dt = cfg.timestep
        zero = np.zeros(6)

        state = init_tank(cfg)
        for _ in range(50):
            state = step(state, zero, footprints=feet)
        assert np.all(state.h_now == 0.0)

        forcing = np.array([0.1, 0.05, -0.03, 0.02, 0.0, -0.1])
        s1 = init_tank(cfg)
        s2 = init_tank(cfg)
        for _ in range(200):
            s1 = step(s1, forcing, footprints=feet)
            s2 = step(s2, 2.0 * forcing, footprints=feet)
        assert np.allclose(2.0 * s1.h_now, s2.h_now, atol=1e-12)

        sym = np.full(6, 0.2)
        s3 = init_tank(cfg)
        for _ in range(300):
            s3 = step(s3, sym, footprints=feet)
        assert np.allclose(s3.h_now, s3.h_now[:, ::-1], atol=1e-12)

        e0 = watersim.discrete_energy(s3, dt)
        for _ in range(400):
            s3 = step(s3, zero, footprints=feet)
        assert watersim.discrete_energy(s3, dt) < e0


def test_watersim_default_grid_10s():
    with criterion("full-tank 10 s run"):
        cfg = TankConfig()
        rate = 8000
        from whisperwater.signal_core import ChannelWaveform
        channels = [ChannelWaveform(channel=k + 1,
                                    samples=np.full(10 * rate, 1.0),
                                    sample_rate=rate)
                    for k in range(6)]
        start = time.perf_counter()
        seq, state = watersim.run(cfg, channels, frame_rate=10.0)
        elapsed = time.perf_counter() - start
        assert elapsed < 60.0
        assert np.all(np.isfinite(state.h_now))
        assert np.max(np.abs(state.h_now)) < 1.0
        third = cfg.grid_nx // 3
        centre = np.mean([watersim.field_rms(f.heightfield[third: 2 * third])
                          for f in seq.frames[20:]])
        outer = np.mean([watersim.field_rms(np.concatenate(
            [f.heightfield[:third], f.heightfield[2 * third:]]))
            for f in seq.frames[20:]])
        assert centre >= outer


def test_agent_protocol():
    with criterion("agent protocol"):
        agents = [AgentConfig(agent_id=k) for k in range(6)]
        summarizer = AgentConfig(agent_id=6)

        def transcript_bytes():
            providers = {k: MockChatProvider(k, seed=42) for k in range(7)}
            transcript, votes, _ = run_dialogue("a quiet admission", agents,
                                                summarizer, providers)
            return json.dumps([u.to_dict() for u in transcript],
                              sort_keys=True).encode(), transcript, votes

        blob1, transcript, votes = transcript_bytes()
        blob2, _, _ = transcript_bytes()
        assert blob1 == blob2
        rounds = [u.round for u in transcript]
        assert rounds.count(1) == 6 and rounds.count(3) == 1 and rounds.count(4) == 1
        assert transcript[-1].agent_id == 6
        assert all(len(u.text) <= 150 for u in transcript)
        assert len(votes) == 6

        rng = random.Random(99)
        for _ in range(100):
            n = rng.randint(0, 400)
            text = " ".join(rng.choice(["ah", "breath", "water", "listen"])
                            for _ in range(n))
            assert len(truncate_text(text)) <= 150

        for trial in range(1000):
            r = random.Random(trial)
            sources = [[(i, j) for j in range(r.randint(0, 8))] for i in range(6)]
            merged = list(multiplex(sources))
            assert sorted(merged) == sorted(x for s in sources for x in s)
            for i in range(6):
                seen = [j for (si, j) in merged if si == i]
                assert seen == sorted(seen)


SMALL_TOML = """
[engine]
contemplation_seconds = 1.0

[tank]
grid_nx = 128
grid_ny = 22
"""


def test_ritual_end_to_end(tmp_path, monkeypatch):
    with criterion("sealed ritual session"):
        cfg = tmp_path / "cfg.toml"
        cfg.write_text(SMALL_TOML)
        confession = tmp_path / "confession.txt"
        secret = "I broke the clock and blamed the cat."
        confession.write_text(secret)
        out = tmp_path / "out"
        monkeypatch.setenv("WW_SEAL_KEY", "ee" * 32)

        def refuse(*args, **kwargs):
            raise AssertionError("network touched in offline mode")

        monkeypatch.setattr(socket.socket, "connect", refuse)
        monkeypatch.setattr(socket, "create_connection", refuse)

        start = time.perf_counter()
        result = CliRunner().invoke(main, [
            "run", "--input", str(confession), "--config", str(cfg),
            "--mock", "--out", str(out)])
        assert result.exit_code == 0, result.output
        assert time.perf_counter() - start < 90.0

        record = read_record(next((out / "sessions").glob("*.wwr")))
        payload = json.loads(decrypt_record(record, bytes.fromhex("ee" * 32)))
        assert payload["confession"]["text"] == secret
        assert len(payload["transcript"]) == 8

        tampered = dataclasses.replace(
            record, ciphertext=bytes([record.ciphertext[0] ^ 0xFF])
            + record.ciphertext[1:])
        with pytest.raises(SealFailed):
            decrypt_record(tampered, bytes.fromhex("ee" * 32))

        # nothing readable on disk outside the sealed record
        for path in out.rglob("*"):
            if path.is_file() and path.suffix in (".json", ".csv", ".txt"):
                assert secret not in path.read_text()


def test_sentiment_mapping():
    with criterion("emotion mapping"):
        tiers = {"sad": BAND_LOW, "neutral": BAND_LOW,
                 "happy": BAND_MID, "disgusted": BAND_MID,
                 "angry": BAND_HIGH, "fearful": BAND_HIGH, "surprised": BAND_HIGH}
        for label in LABELS:
            for conf in np.linspace(0.2, 1.0, 9):
                raw = {l: (1.0 - conf) / 6.0 for l in LABELS}
                raw[label] = conf
                scores = EmotionScores.from_raw(raw)
                spec = emotion_to_band(scores)
                if scores.dominant == label:
                    lo, hi = tiers[label]
                    assert spec.band == (lo, hi)
                    assert abs(spec.freq - (lo + scores.scores[label] * (hi - lo))) < 1e-9
                assert 20.0 <= spec.freq <= 100.0

        spec = emotion_to_band(EmotionScores.from_raw({"sad": 1.0}))
        waves = contemplation_waveform(spec, duration=5.0, out_rate=8000)
        assert len(waves) == 6
        for wf in waves[1:]:
            assert np.array_equal(wf.samples, waves[0].samples)
        t = np.arange(waves[0].samples.size) / 8000
        carrier = np.sin(2 * np.pi * spec.freq * t)
        mask = np.abs(carrier) > 0.2
        env = np.abs(waves[0].samples[mask] / carrier[mask])
        tt = t[mask]
        ramp = tt < FADE_SECONDS
        expected = CONTEMPLATION_AMPLITUDE * tt[ramp] / FADE_SECONDS
        assert np.max(np.abs(env[ramp] - expected)) < 1e-6
        assert np.max(np.abs(env[~ramp] - CONTEMPLATION_AMPLITUDE)) < 1e-6
