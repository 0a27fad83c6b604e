"""Finite-difference simulation of the tank surface.

Damped linear 2D wave equation on a cell-centred grid, leapfrog in time,
5-point Laplacian, Neumann (rigid wall) boundaries. The six sources force
vertically through Gaussian footprints along the tank centreline.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import Instability, InvalidConfig, InvalidInput
from .signal_core import ChannelWaveform

INCH = 0.0254
US_GALLON_M3 = 0.003785411784

TANK_LENGTH_M = 72 * INCH      # 1.8288
TANK_WIDTH_M = 12 * INCH       # 0.3048
TANK_VOLUME_M3 = 2 * US_GALLON_M3
DEFAULT_DEPTH_M = TANK_VOLUME_M3 / (TANK_LENGTH_M * TANK_WIDTH_M)   # ~0.0136 m

GRAVITY = 9.80665
BLOWUP_THRESHOLD_M = 1.0


def _default_sources() -> tuple[tuple[float, float], ...]:
    """Six positions spaced 12 inches apart along the centreline, centred."""
    spacing = 12 * INCH
    x0 = (TANK_LENGTH_M - 5 * spacing) / 2
    y = TANK_WIDTH_M / 2
    return tuple((x0 + k * spacing, y) for k in range(6))


@dataclass(frozen=True)
class TankConfig:
    length_m: float = TANK_LENGTH_M
    width_m: float = TANK_WIDTH_M
    depth_m: float = DEFAULT_DEPTH_M
    grid_nx: int = 512
    grid_ny: int = 86
    wave_speed_mps: float = float(np.sqrt(GRAVITY * DEFAULT_DEPTH_M))    # shallow-water
    damping_per_s: float = 1.5
    source_positions: tuple[tuple[float, float], ...] = field(default_factory=_default_sources)
    source_radius_m: float = 0.04
    dt: float | None = None     # None -> 0.9 * dx / (c * sqrt(2))

    @property
    def dx(self) -> float:
        return self.length_m / self.grid_nx

    @property
    def dy(self) -> float:
        return self.width_m / self.grid_ny

    @property
    def stable_dt(self) -> float:
        return self.dx / (self.wave_speed_mps * np.sqrt(2.0))

    @property
    def timestep(self) -> float:
        return 0.9 * self.stable_dt if self.dt is None else self.dt

    def validate(self) -> None:
        if self.grid_nx <= 2 or self.grid_ny <= 2:
            raise InvalidConfig("grid must be at least 3x3")
        if self.wave_speed_mps <= 0 or self.depth_m <= 0:
            raise InvalidConfig("wave speed and depth must be positive")
        if self.damping_per_s < 0:
            raise InvalidConfig("damping must be non-negative")
        if abs(self.dx - self.dy) > 0.1 * self.dx:
            raise InvalidConfig(f"grid spacing anisotropic: dx={self.dx:.4g} dy={self.dy:.4g}")
        if len(self.source_positions) != 6:
            raise InvalidConfig("exactly six source positions required")
        for x, y in self.source_positions:
            if not (0 <= x <= self.length_m and 0 <= y <= self.width_m):
                raise InvalidConfig(f"source ({x}, {y}) outside tank bounds")
        if self.timestep > self.stable_dt * (1 + 1e-12):
            raise InvalidConfig(
                f"CFL violation: dt={self.timestep:.6g} exceeds stable maximum {self.stable_dt:.6g}"
            )


@dataclass
class SimState:
    h_now: np.ndarray       # (nx, ny) metres
    h_prev: np.ndarray
    t: float
    config: TankConfig


def _cell_centers(config: TankConfig):
    x = (np.arange(config.grid_nx) + 0.5) * config.dx
    y = (np.arange(config.grid_ny) + 0.5) * config.dy
    return x, y


def source_footprints(config: TankConfig) -> np.ndarray:
    """(6, nx, ny) Gaussian coupling masks, peak 1 at each source centre."""
    x, y = _cell_centers(config)
    xx, yy = np.meshgrid(x, y, indexing="ij")
    sigma = config.source_radius_m
    masks = np.empty((6, config.grid_nx, config.grid_ny))
    for k, (sx, sy) in enumerate(config.source_positions):
        masks[k] = np.exp(-((xx - sx) ** 2 + (yy - sy) ** 2) / (2 * sigma**2))
    return masks


def init_tank(config: TankConfig) -> SimState:
    config.validate()
    shape = (config.grid_nx, config.grid_ny)
    return SimState(h_now=np.zeros(shape), h_prev=np.zeros(shape), t=0.0, config=config)


def _laplacian_neumann(h: np.ndarray) -> np.ndarray:
    """Dimensionless 5-point stencil with mirrored (zero-flux) boundaries."""
    p = np.pad(h, 1, mode="edge")
    return p[:-2, 1:-1] + p[2:, 1:-1] + p[1:-1, :-2] + p[1:-1, 2:] - 4 * h


def step(state: SimState, forcing, dt: float | None = None,
         footprints: np.ndarray | None = None) -> SimState:
    """Advance one leapfrog step under six scalar forcing samples."""
    cfg = state.config
    dt = cfg.timestep if dt is None else dt
    forcing = np.asarray(forcing, dtype=np.float64)
    if forcing.shape != (6,):
        raise InvalidInput("forcing must be six samples")
    if not np.all(np.isfinite(forcing)):
        raise InvalidInput("forcing contains non-finite values")
    if cfg.wave_speed_mps * dt / cfg.dx > 1 / np.sqrt(2) + 1e-12:
        raise InvalidConfig(f"CFL violation at dt={dt:.6g}; stable maximum {cfg.stable_dt:.6g}")
    if footprints is None:
        footprints = source_footprints(cfg)
    r2 = (cfg.wave_speed_mps * dt / cfg.dx) ** 2
    drive = np.tensordot(forcing, footprints, axes=1)
    h_next = (
        2 * state.h_now
        - state.h_prev
        + r2 * _laplacian_neumann(state.h_now)
        - cfg.damping_per_s * dt * (state.h_now - state.h_prev)
        + dt * dt * drive
    )
    if np.abs(h_next).max() > BLOWUP_THRESHOLD_M:
        raise Instability(f"field exceeded {BLOWUP_THRESHOLD_M} m at t={state.t + dt:.3f}")
    return SimState(h_now=h_next, h_prev=state.h_now, t=state.t + dt, config=cfg)


@dataclass(frozen=True)
class Frame:
    t: float
    heightfield: np.ndarray
    min: float
    max: float


@dataclass(frozen=True)
class FrameSequence:
    frames: tuple[Frame, ...]
    frame_rate: float


def _snapshot(state: SimState) -> Frame:
    h = state.h_now.copy()
    return Frame(t=state.t, heightfield=h, min=float(h.min()), max=float(h.max()))


def run(config: TankConfig, channels: list[ChannelWaveform], frame_rate: float = 30.0,
        initial: SimState | None = None) -> tuple[FrameSequence, SimState]:
    """Drive the tank with six channel waveforms, snapshotting at frame_rate.

    Returns the frames plus the final state so callers can chain utterances
    on a field carrying residue.
    """
    if len(channels) != 6:
        raise InvalidInput("run requires six channel waveforms")
    durations = {round(c.samples.size / c.sample_rate, 9) for c in channels}
    if len(durations) != 1:
        raise InvalidInput(f"channel durations differ: {sorted(durations)}")
    duration = durations.pop()
    dt = config.timestep
    if frame_rate > 1 / dt:
        raise InvalidInput(f"frame_rate {frame_rate} exceeds the sim rate {1 / dt:.1f}")
    state = init_tank(config) if initial is None else initial
    footprints = source_footprints(config)
    by_channel = sorted(channels, key=lambda c: c.channel)
    if [c.channel for c in by_channel] != [1, 2, 3, 4, 5, 6]:
        raise InvalidInput("channels must cover 1..6")

    n_steps = int(round(duration / dt))
    times = state.t + dt * np.arange(1, n_steps + 1)
    rel = times - state.t
    forcing = np.stack([
        np.interp(rel, np.arange(c.samples.size) / c.sample_rate, c.samples,
                  left=0.0, right=0.0)
        for c in by_channel
    ])
    frames = [_snapshot(state)]
    next_frame_t = state.t + 1 / frame_rate
    for i in range(n_steps):
        state = step(state, forcing[:, i], dt, footprints)
        if state.t + 1e-12 >= next_frame_t:
            frames.append(_snapshot(state))
            next_frame_t += 1 / frame_rate
    return FrameSequence(frames=tuple(frames), frame_rate=frame_rate), state


def render_frame(heightfield: np.ndarray) -> np.ndarray:
    """8-bit grayscale: linear map [min, max] -> [0, 255]; flat field -> 128."""
    if not np.all(np.isfinite(heightfield)):
        raise InvalidInput("heightfield contains non-finite values")
    lo, hi = heightfield.min(), heightfield.max()
    if hi == lo:
        return np.full(heightfield.shape, 128, dtype=np.uint8)
    scaled = (heightfield - lo) / (hi - lo) * 255.0
    return np.round(scaled).astype(np.uint8)


WWF_MAGIC = b"WWF1"


def write_frames(path: str | Path, seq: FrameSequence) -> None:
    """Binary frame dump: WWF1 header then row-major float32 frames."""
    frames = seq.frames
    nx, ny = frames[0].heightfield.shape if frames else (0, 0)
    with open(path, "wb") as fh:
        fh.write(WWF_MAGIC)
        fh.write(struct.pack("<IIfI", nx, ny, float(seq.frame_rate), len(frames)))
        for fr in frames:
            fh.write(fr.heightfield.astype("<f4").tobytes(order="C"))


def read_frames(path: str | Path) -> FrameSequence:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != WWF_MAGIC:
            raise InvalidInput(f"bad frames file magic {magic!r}")
        nx, ny, frame_rate, count = struct.unpack("<IIfI", fh.read(16))
        frames = []
        for i in range(count):
            data = np.frombuffer(fh.read(4 * nx * ny), dtype="<f4").reshape(nx, ny)
            h = data.astype(np.float64)
            frames.append(Frame(t=i / frame_rate, heightfield=h,
                                min=float(h.min()), max=float(h.max())))
    return FrameSequence(frames=tuple(frames), frame_rate=frame_rate)


def field_rms(h: np.ndarray) -> float:
    return float(np.sqrt(np.mean(h * h)))


def discrete_energy(state: SimState, dt: float | None = None) -> float:
    """Sum of squared velocity plus c^2 |grad h|^2; decays under damping."""
    cfg = state.config
    dt = cfg.timestep if dt is None else dt
    v = (state.h_now - state.h_prev) / dt
    gx = np.diff(state.h_now, axis=0) / cfg.dx
    gy = np.diff(state.h_now, axis=1) / cfg.dy
    c2 = cfg.wave_speed_mps**2
    return float(np.sum(v * v) + c2 * (np.sum(gx * gx) + np.sum(gy * gy)))
