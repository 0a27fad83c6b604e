import numpy as np
import pytest

from whisperwater.errors import InvalidConfig, InvalidInput
from whisperwater.signal_core import ChannelWaveform
from whisperwater import watersim as ws


def small_config(**kw):
    defaults = dict(
        length_m=0.6, width_m=0.6, depth_m=0.0136,
        grid_nx=60, grid_ny=60, wave_speed_mps=0.365, damping_per_s=0.0,
        source_positions=tuple((0.1 + 0.08 * k, 0.3) for k in range(6)),
        source_radius_m=0.03,
    )
    defaults.update(kw)
    return ws.TankConfig(**defaults)


def const_channels(amps, duration=1.0, freq=30.0, rate=8000):
    t = np.arange(int(duration * rate)) / rate
    return [
        ChannelWaveform(channel=k + 1, samples=amps[k] * np.sin(2 * np.pi * freq * t), sample_rate=rate)
        for k in range(6)
    ]


class TestInitTank:
    def test_default_zero_field(self):
        state = ws.init_tank(ws.TankConfig())
        assert np.all(state.h_now == 0) and np.all(state.h_prev == 0) and state.t == 0

    def test_cfl_violation_reports_stable_dt(self):
        cfg = ws.TankConfig(dt=1.0)
        with pytest.raises(InvalidConfig, match="stable maximum"):
            ws.init_tank(cfg)

    def test_default_depth_from_two_gallons(self):
        # oracle: 2 * 231 in^3 / (72 * 12 in^2) = 0.534722 in
        expected = 2 * 231 * 0.0254**3 / (864 * 0.0254**2)
        assert ws.DEFAULT_DEPTH_M == pytest.approx(expected, rel=1e-9)
        assert ws.DEFAULT_DEPTH_M == pytest.approx(0.0136, abs=5e-4)


class TestStep:
    def test_zero_forcing_zero_field_fixed_point(self):
        state = ws.init_tank(small_config())
        for _ in range(5):
            state = ws.step(state, np.zeros(6))
        assert np.all(state.h_now == 0)

    def test_nonfinite_forcing_rejected(self):
        state = ws.init_tank(small_config())
        with pytest.raises(InvalidInput):
            ws.step(state, [np.nan] * 6)

    def test_impulse_wavefront_speed(self):
        cfg = small_config()
        state = ws.init_tank(cfg)
        fp = ws.source_footprints(cfg)
        state = ws.step(state, [0, 0, 10.0, 0, 0, 0], footprints=fp)
        sx, sy = cfg.source_positions[2]
        x = (np.arange(cfg.grid_nx) + 0.5) * cfg.dx
        y = (np.arange(cfg.grid_ny) + 0.5) * cfg.dy
        xx, yy = np.meshgrid(x, y, indexing="ij")
        r = np.sqrt((xx - sx) ** 2 + (yy - sy) ** 2)
        for _ in range(25):
            state = ws.step(state, np.zeros(6), footprints=fp)
        # oracle: furthest point above 10% of peak tracks c*t plus the
        # footprint radius where the disturbance started
        peak = np.abs(state.h_now).max()
        radius = r[np.abs(state.h_now) > 0.1 * peak].max()
        expected = cfg.wave_speed_mps * state.t
        assert abs(radius - expected) <= 2 * cfg.dx + 3 * cfg.source_radius_m

    def test_energy_decay_under_damping(self):
        cfg = small_config(damping_per_s=2.0)
        state = ws.init_tank(cfg)
        fp = ws.source_footprints(cfg)
        state = ws.step(state, [0, 0, 50.0, 0, 0, 0], footprints=fp)
        energy = ws.discrete_energy(state)
        for _ in range(100):
            state = ws.step(state, np.zeros(6), footprints=fp)
            e = ws.discrete_energy(state)
            assert e <= energy * (1 + 1e-12)
            energy = e

    def test_linearity(self):
        cfg = small_config(damping_per_s=1.0)
        fp = ws.source_footprints(cfg)
        rng = np.random.default_rng(3)
        fa = rng.standard_normal((40, 6))
        fb = rng.standard_normal((40, 6))

        def simulate(forcing):
            state = ws.init_tank(cfg)
            for row in forcing:
                state = ws.step(state, row, footprints=fp)
            return state.h_now

        ha, hb, hab = simulate(fa), simulate(fb), simulate(fa + fb)
        scale = np.abs(hab).max()
        assert np.allclose(ha + hb, hab, atol=1e-6 * scale)

    def test_mirror_symmetry_about_long_axis(self):
        cfg = ws.TankConfig(grid_nx=128, grid_ny=22, dt=None)
        state = ws.init_tank(cfg)
        fp = ws.source_footprints(cfg)
        rng = np.random.default_rng(5)
        for row in rng.standard_normal((50, 6)):
            state = ws.step(state, row, footprints=fp)
        assert np.allclose(state.h_now, state.h_now[:, ::-1], atol=1e-9)


class TestRun:
    def test_zero_channels_zero_frames(self):
        seq, state = ws.run(small_config(), const_channels([0.0] * 6, duration=0.5), frame_rate=20)
        assert all(np.all(fr.heightfield == 0) for fr in seq.frames)
        assert np.all(state.h_now == 0)

    def test_duration_mismatch_rejected(self):
        chans = const_channels([1.0] * 6, duration=0.5)
        chans[2] = ChannelWaveform(channel=3, samples=np.zeros(100), sample_rate=8000)
        with pytest.raises(InvalidInput):
            ws.run(small_config(), chans)

    def test_standing_wave_with_single_channel(self):
        # dt divides the 30 Hz period exactly, so 30 fps frames are one
        # forcing period apart
        cfg = ws.TankConfig(grid_nx=128, grid_ny=22, dt=1 / 240)
        chans = const_channels([0, 0, 1.0, 0, 0, 0], duration=6.0)
        seq, _ = ws.run(cfg, chans, frame_rate=30.0)
        late = [fr.heightfield for fr in seq.frames if fr.t > 5.0]
        # 30 fps on a 30 Hz drive: consecutive frames are one forcing period apart
        diffs = [ws.field_rms(b - a) / max(ws.field_rms(b), 1e-30) for a, b in zip(late, late[1:])]
        assert np.median(diffs) < 0.05

    def test_frame_timestamps_increase(self):
        seq, _ = ws.run(small_config(), const_channels([1.0] * 6, duration=0.5), frame_rate=20)
        times = [fr.t for fr in seq.frames]
        assert all(b > a for a, b in zip(times, times[1:]))
        for fr in seq.frames:
            assert fr.min == fr.heightfield.min() and fr.max == fr.heightfield.max()

    def test_central_prominence(self):
        cfg = ws.TankConfig()
        seq, _ = ws.run(cfg, const_channels([1.0] * 6, duration=10.0), frame_rate=20.0)
        nx = cfg.grid_nx
        third = nx // 3
        central = np.mean([ws.field_rms(f.heightfield[third : 2 * third]) for f in seq.frames[20:]])
        outer = np.mean([
            ws.field_rms(np.concatenate([f.heightfield[:third], f.heightfield[2 * third :]]))
            for f in seq.frames[20:]
        ])
        assert central >= outer


class TestRenderFrame:
    def test_flat_field_mid_gray(self):
        assert np.all(ws.render_frame(np.zeros((4, 5))) == 128)

    def test_max_cell_hits_255(self):
        h = np.zeros((6, 6))
        h[2, 3] = 1e-3
        img = ws.render_frame(h)
        assert img[2, 3] == 255 and img.min() == 0

    def test_inverse_map(self):
        rng = np.random.default_rng(9)
        h = rng.standard_normal((8, 8))
        img = ws.render_frame(h)
        lo, hi = h.min(), h.max()
        recovered = lo + img.astype(float) / 255.0 * (hi - lo)
        assert np.abs(recovered - h).max() <= (hi - lo) / 255.0


class TestFrameFile:
    def test_round_trip(self, tmp_path):
        seq, _ = ws.run(small_config(), const_channels([1.0] * 6, duration=0.3), frame_rate=20)
        path = tmp_path / "frames.wwf"
        ws.write_frames(path, seq)
        back = ws.read_frames(path)
        assert back.frame_rate == seq.frame_rate
        assert len(back.frames) == len(seq.frames)
        for a, b in zip(seq.frames, back.frames):
            assert np.allclose(a.heightfield, b.heightfield, atol=1e-6)

    def test_bad_magic(self, tmp_path):
        p = tmp_path / "junk.wwf"
        p.write_bytes(b"NOPE" + b"\x00" * 16)
        with pytest.raises(InvalidInput):
            ws.read_frames(p)
