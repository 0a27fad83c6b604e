"""HTTP session gateway.

Exposes session lifecycle over a small JSON API with a JSON-lines event
stream per session. Each emitted event carries a per-session monotone `seq`
so clients can resume after a dropped connection with `?since=<seq>`.
"""

from __future__ import annotations

import base64
import json
import os
import tempfile
import threading
import time
from pathlib import Path

import numpy as np
from fastapi import FastAPI, HTTPException, Request
from fastapi.responses import FileResponse, StreamingResponse

from ..audio import AudioBuffer, load_wav, save_wav
from ..errors import WhisperWaterError
from ..ritual import Phase, RitualCoordinator, RitualSession, write_record
from ..signal_core import waveset_to_dict
from ..watersim import FrameSequence, render_frame, write_frames
from .asr import transcribe
from .cli import DEV_SEAL_KEY, _providers
from .config import EngineConfig


class SessionRunner:
    """One ritual session plus its buffered event log."""

    def __init__(self, cfg: EngineConfig, mock: bool, out_root: Path):
        self.cfg = cfg
        self.mock = mock
        self.session = RitualSession()
        self.out = out_root / self.session.session_id
        self.out.mkdir(parents=True, exist_ok=True)
        self.events: list[dict] = []
        self.finished = False
        self.error: str | None = None
        self._cond = threading.Condition()
        self._thread: threading.Thread | None = None

        chat, tts, emotion = _providers(cfg, mock)
        key = os.environ.get("WW_SEAL_KEY")
        seal_key = bytes.fromhex(key) if key else (DEV_SEAL_KEY if mock else None)
        self.coordinator = RitualCoordinator(
            tank_config=cfg.tank,
            agents=[a for a in cfg.agents if a.agent_id < 6],
            summarizer=next(a for a in cfg.agents if a.agent_id == 6),
            chat_providers=chat, tts_provider=tts, emotion_provider=emotion,
            seal_key=seal_key, key_id=cfg.key_id,
            frame_rate=cfg.frame_rate, out_rate=cfg.out_rate,
            contemplation_seconds=cfg.contemplation_seconds,
            repeats_2_3=cfg.rounds_2_3_repeats,
            emit=self._on_emit,
        )

    # -- event plumbing ----------------------------------------------------

    def _push(self, kind: str, payload) -> None:
        with self._cond:
            self.events.append({"seq": len(self.events), "kind": kind,
                                "t": time.time(), "payload": payload})
            self._cond.notify_all()

    def _on_emit(self, kind: str, payload) -> None:
        if kind == "agent_event":
            if payload.kind == "token":
                self._push("agent_token", {"agent_id": payload.agent_id,
                                           "round": payload.round,
                                           "delta": payload.payload})
            elif payload.kind == "error":
                self._push("error", {"agent_id": payload.agent_id,
                                     "round": payload.round,
                                     "message": str(payload.payload)})
            return
        if kind == "frame":
            gray = render_frame(payload.heightfield)
            self._push("frame", {
                "t": payload.t, "nx": gray.shape[0], "ny": gray.shape[1],
                "min": payload.min, "max": payload.max,
                "gray_b64": base64.b64encode(gray.tobytes()).decode("ascii"),
            })
            return
        if kind == "sealed":
            names = self._write_artifacts(payload)
            self._push("sealed", {**payload, "artifacts": names})
            return
        self._push(kind, payload)

    def _write_artifacts(self, sealed_payload) -> list[str]:
        coord = self.coordinator
        names = []
        for k in range(6):
            name = f"ch{k + 1}.wav"
            save_wav(self.out / name,
                     AudioBuffer(np.clip(coord.channel_history[k], -1, 1),
                                 self.cfg.out_rate))
            names.append(name)
        if coord.summary_waveset is not None:
            (self.out / "waveset.json").write_text(
                json.dumps(waveset_to_dict(coord.summary_waveset), indent=2))
            names.append("waveset.json")
        if coord.frames:
            seq = FrameSequence(frames=tuple(coord.frames),
                                frame_rate=self.cfg.frame_rate)
            write_frames(self.out / "frames.wwf", seq)
            names.append("frames.wwf")
        return names

    # -- lifecycle ---------------------------------------------------------

    def start(self, confession_text: str | None, confession_audio: AudioBuffer | None):
        def work():
            try:
                record = self.coordinator.run(self.session,
                                              confession_text=confession_text,
                                              confession_audio=confession_audio)
                if self.cfg.retain_sealed:
                    write_record(self.out / f"{record.session_id}.wwr", record)
            except WhisperWaterError as exc:
                self.error = str(exc)
                self._push("error", {"message": str(exc)})
            finally:
                with self._cond:
                    self.finished = True
                    self._cond.notify_all()

        self._thread = threading.Thread(target=work, daemon=True)
        self._thread.start()

    def stream(self, since: int):
        cursor = max(since, 0)
        while True:
            with self._cond:
                while cursor >= len(self.events) and not self.finished:
                    self._cond.wait(timeout=0.5)
                batch = self.events[cursor:]
                done = self.finished and cursor + len(batch) >= len(self.events)
            for ev in batch:
                yield json.dumps(ev, separators=(",", ":")) + "\n"
            cursor += len(batch)
            if done:
                return


def create_app(cfg: EngineConfig | None = None, mock: bool = False,
               out_root: str | Path | None = None) -> FastAPI:
    cfg = cfg or EngineConfig()
    root = Path(out_root) if out_root else Path(cfg.output_dir) / "sessions"
    app = FastAPI(title="whisperwater gateway")
    runners: dict[str, SessionRunner] = {}

    @app.get("/health")
    def health():
        return {"status": "ok", "sessions": len(runners)}

    @app.post("/sessions", status_code=201)
    def create_session():
        runner = SessionRunner(cfg, mock, root)
        runners[runner.session.session_id] = runner
        return {"session_id": runner.session.session_id,
                "phase": runner.session.phase.value}

    def _runner(session_id: str) -> SessionRunner:
        runner = runners.get(session_id)
        if runner is None:
            raise HTTPException(status_code=404, detail="unknown session")
        return runner

    @app.post("/sessions/{session_id}/confession")
    async def submit_confession(session_id: str, request: Request):
        runner = _runner(session_id)
        if runner.session.phase != Phase.IDLE or runner._thread is not None:
            raise HTTPException(status_code=409,
                                detail=f"session is in phase {runner.session.phase.value}")
        ctype = request.headers.get("content-type", "")
        if ctype.startswith("audio/"):
            body = await request.body()
            with tempfile.NamedTemporaryFile(suffix=".wav", delete=False) as tmp:
                tmp.write(body)
                tmp_path = Path(tmp.name)
            try:
                audio = load_wav(tmp_path)
                text = transcribe(tmp_path, audio)
            except WhisperWaterError as exc:
                raise HTTPException(status_code=422, detail=str(exc))
            finally:
                tmp_path.unlink(missing_ok=True)
            runner.start(text, audio)
        else:
            payload = await request.json()
            text = (payload.get("text") or "").strip()
            if not text:
                raise HTTPException(status_code=422, detail="empty confession")
            runner.start(text, None)
        return {"session_id": session_id, "accepted": True}

    @app.get("/sessions/{session_id}/events")
    def events(session_id: str, since: int = -1):
        runner = _runner(session_id)
        return StreamingResponse(runner.stream(since + 1),
                                 media_type="application/x-ndjson")

    @app.get("/sessions/{session_id}/artifacts/{name}")
    def artifact(session_id: str, name: str):
        runner = _runner(session_id)
        path = (runner.out / name).resolve()
        if runner.out.resolve() not in path.parents or not path.is_file():
            raise HTTPException(status_code=404, detail="no such artifact")
        return FileResponse(path)

    return app
