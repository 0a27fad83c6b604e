"""Run reports: matplotlib figures and delimited per-frame statistics."""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np
from PIL import Image

from ..watersim import FrameSequence, field_rms, render_frame


def write_frames_csv(path: str | Path, seq: FrameSequence) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t_seconds", "min_m", "max_m", "rms_m"])
        for fr in seq.frames:
            writer.writerow([f"{fr.t:.6f}", f"{fr.min:.9e}", f"{fr.max:.9e}",
                             f"{field_rms(fr.heightfield):.9e}"])


def write_frame_pngs(outdir: str | Path, seq: FrameSequence, limit: int | None = None) -> list[Path]:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    paths = []
    frames = seq.frames if limit is None else seq.frames[:limit]
    for i, fr in enumerate(frames):
        img = Image.fromarray(render_frame(fr.heightfield).T)
        p = outdir / f"frame_{i:05d}.png"
        img.save(p)
        paths.append(p)
    return paths


def plot_surface_stills(path: str | Path, seq: FrameSequence, n_stills: int = 6) -> None:
    """A row of surface snapshots spanning the run."""
    frames = seq.frames
    idx = np.linspace(0, len(frames) - 1, min(n_stills, len(frames))).astype(int)
    fig, axes = plt.subplots(len(idx), 1, figsize=(10, 1.6 * len(idx)), squeeze=False)
    for ax, i in zip(axes[:, 0], idx):
        fr = frames[i]
        ax.imshow(fr.heightfield.T, cmap="gray", aspect="auto", origin="lower")
        ax.set_ylabel(f"t={fr.t:.2f}s", fontsize=8)
        ax.set_xticks([])
        ax.set_yticks([])
    fig.suptitle("water surface height")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_rms_timeline(path: str | Path, seq: FrameSequence) -> None:
    t = [fr.t for fr in seq.frames]
    rms = [field_rms(fr.heightfield) for fr in seq.frames]
    fig, ax = plt.subplots(figsize=(8, 3))
    ax.plot(t, rms, lw=1)
    ax.set_xlabel("time (s)")
    ax.set_ylabel("surface RMS (m)")
    ax.set_yscale("symlog", linthresh=1e-9)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def write_report(outdir: str | Path, seq: FrameSequence, pngs: bool = False) -> list[Path]:
    """CSV plus the two figures (plus per-frame PNGs when requested)."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    written = []
    csv_path = outdir / "frames.csv"
    write_frames_csv(csv_path, seq)
    written.append(csv_path)
    if seq.frames:
        stills = outdir / "surface_stills.png"
        plot_surface_stills(stills, seq)
        written.append(stills)
        rms = outdir / "surface_rms.png"
        plot_rms_timeline(rms, seq)
        written.append(rms)
    if pngs:
        written.extend(write_frame_pngs(outdir / "frames_png", seq))
    return written
