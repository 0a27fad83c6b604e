import json
import time

import numpy as np
import pytest

from whisperwater.audio import ENGINE_RATE, AudioBuffer
from whisperwater.errors import ProtocolViolation, SealFailed
from whisperwater import ritual as rt
from whisperwater.watersim import TankConfig, field_rms

from conftest import sine

KEY = bytes(range(32))


def fresh_session():
    return rt.RitualSession(session_id="test-session")


def released_session():
    s = fresh_session()
    s.phase = rt.Phase.RELEASE
    s.confession_text = "a secret"
    return s


class TestAdvance:
    def test_begin(self):
        s = fresh_session()
        rt.advance(s, rt.RitualEvent("begin"))
        assert s.phase == rt.Phase.CONFESSION

    def test_long_recording_truncated(self):
        s = fresh_session()
        rt.advance(s, rt.RitualEvent("begin"))
        audio = sine(100.0, duration=17.0)
        rt.advance(s, rt.RitualEvent("recording-complete", audio))
        assert s.phase == rt.Phase.CONTEMPLATION
        assert s.confession_audio.duration == pytest.approx(15.0, abs=1e-6)

    def test_round_four_to_release(self):
        s = fresh_session()
        s.phase = rt.Phase.RESPONSE
        s.response_round = 4
        rt.advance(s, rt.RitualEvent("round-complete", 4))
        assert s.phase == rt.Phase.RELEASE

    def test_illegal_event_leaves_state(self):
        s = fresh_session()
        with pytest.raises(ProtocolViolation):
            rt.advance(s, rt.RitualEvent("round-complete", 1))
        assert s.phase == rt.Phase.IDLE

    def test_rounds_progress_in_order(self):
        s = fresh_session()
        s.phase = rt.Phase.RESPONSE
        s.response_round = 1
        for n in (1, 2, 3):
            rt.advance(s, rt.RitualEvent("round-complete", n))
            assert s.response_round == n + 1
        with pytest.raises(ProtocolViolation):
            rt.advance(s, rt.RitualEvent("round-complete", 2))


class TestSeal:
    def test_round_trip(self):
        s = released_session()
        plaintext = rt.serialize_session(s)
        record = rt.seal_session(s, KEY)
        assert rt.decrypt_record(record, KEY) == plaintext
        assert s.sealed and s.phase == rt.Phase.COMPLETE

    def test_tamper_detection(self):
        record = rt.seal_session(released_session(), KEY)
        flipped = bytearray(record.ciphertext)
        flipped[5] ^= 0x01
        bad = rt.EncryptedRecord(session_id=record.session_id, ciphertext=bytes(flipped),
                                 nonce=record.nonce, key_id=record.key_id,
                                 created_at=record.created_at)
        with pytest.raises(SealFailed):
            rt.decrypt_record(bad, KEY)

    def test_plaintext_cleared(self):
        s = released_session()
        s.confession_audio = sine(100.0, duration=1.0)
        rt.seal_session(s, KEY)
        assert s.confession_text is None
        assert s.confession_audio is None
        assert s.transcript == [] and s.votes == {} and s.emotion is None

    def test_missing_key_fails_without_sealing(self):
        s = released_session()
        with pytest.raises(SealFailed):
            rt.seal_session(s, None)
        assert not s.sealed and s.confession_text == "a secret"

    def test_wrong_phase_rejected(self):
        with pytest.raises(ProtocolViolation):
            rt.seal_session(fresh_session(), KEY)


class TestRecordFile:
    def test_round_trip(self, tmp_path):
        record = rt.seal_session(released_session(), KEY, key_id="k1", created_at=123.5)
        path = tmp_path / "s.wwr"
        rt.write_record(path, record)
        back = rt.read_record(path)
        assert back == record

    def test_bad_magic(self, tmp_path):
        p = tmp_path / "bad.wwr"
        p.write_bytes(b"XXXX123")
        with pytest.raises(SealFailed):
            rt.read_record(p)


def small_tank():
    return TankConfig(grid_nx=128, grid_ny=22)


def run_full_session(text="I once let a friendship die out of pride.", **kw):
    events = []
    coord = rt.RitualCoordinator(
        tank_config=small_tank(), seal_key=KEY,
        emit=lambda kind, payload: events.append((kind, payload)), **kw)
    session = rt.RitualSession(session_id="fixed-id")
    record = coord.run(session, confession_text=text)
    return coord, session, record, events


class TestCoordinator:
    def test_full_mock_session(self):
        start = time.monotonic()
        coord, session, record, events = run_full_session()
        assert time.monotonic() - start < 90
        assert session.phase == rt.Phase.COMPLETE and session.sealed
        phases = [p["phase"] for k, p in events if k == "phase_changed"]
        assert phases[0] == "confession" and phases[-1] == "complete"
        assert rt.decrypt_record(record, KEY)

    def test_transcript_counts(self):
        coord, session, record, events = run_full_session()
        utts = [p for k, p in events if k == "utterance"]
        rounds = [u["round"] for u in utts]
        assert rounds.count(1) == 6 and rounds.count(3) == 1 and rounds.count(4) == 1

    def test_residue_present_at_round3_onset(self):
        coord, session, record, events = run_full_session()
        start_t, _ = coord.activity_intervals["round3"]
        prior = [fr for fr in coord.frames if fr.t <= start_t]
        assert field_rms(prior[-1].heightfield) > 0

    def test_sequential_rounds_disjoint_round4_single_interval(self):
        coord, *_ = run_full_session()
        intervals = sorted(coord.activity_intervals.items(), key=lambda kv: kv[1][0])
        for (la, (s1, e1)), (lb, (s2, e2)) in zip(intervals, intervals[1:]):
            assert e1 <= s2 + 1e-9, f"{la} overlaps {lb}"
        assert "round4" in coord.activity_intervals

    def test_round4_drives_all_channels(self):
        coord, *_ = run_full_session()
        s, e = coord.activity_intervals["round4"]
        i0, i1 = int(s * 8000), int(e * 8000)
        for k in range(6):
            seg = coord.channel_history[k][i0:i1]
            assert np.abs(seg).max() > 0

    def test_reproducible_plaintext(self):
        _, s1, _, _ = run_full_session()
        _, s2, _, _ = run_full_session()
        # sessions are scrubbed after sealing; compare the pre-seal capture
        events1 = run_full_session()[3]
        events2 = run_full_session()[3]
        utts1 = [p for k, p in events1 if k == "utterance"]
        utts2 = [p for k, p in events2 if k == "utterance"]
        assert utts1 == utts2

    def test_event_phase_chain_monotone(self):
        _, _, _, events = run_full_session()
        order = ["confession", "contemplation", "response", "release", "complete"]
        phases = [p["phase"] for k, p in events if k == "phase_changed"]
        idxs = [order.index(p) for p in phases]
        assert idxs == sorted(idxs)
