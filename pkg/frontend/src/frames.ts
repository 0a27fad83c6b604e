import type { FramePayload } from './types.js';

export type Palette = 'grayscale' | 'dye';

function decodeBase64(b64: string): Uint8Array {
    if (typeof atob === 'function') {
        const bin = atob(b64);
        const out = new Uint8Array(bin.length);
        for (let i = 0; i < bin.length; i++) out[i] = bin.charCodeAt(i);
        return out;
    }
    return Uint8Array.from(Buffer.from(b64, 'base64'));
}

/**
 * Map one frame payload to RGBA pixels, row-major (nx rows of ny columns).
 * Pure color mapping: the engine's gray values are never recomputed here.
 */
export function frameToRGBA(frame: FramePayload, palette: Palette = 'grayscale'): Uint8ClampedArray {
    const gray = decodeBase64(frame.gray_b64);
    const n = frame.nx * frame.ny;
    if (gray.length !== n) {
        throw new Error(`frame payload is ${gray.length} bytes, expected ${n}`);
    }
    const rgba = new Uint8ClampedArray(n * 4);
    for (let i = 0; i < n; i++) {
        const g = gray[i]!;
        let r = g, gg = g, b = g;
        if (palette === 'dye') {
            // UV-dye look: troughs deep blue, crests cyan-white
            r = Math.round((g / 255) ** 2 * 200);
            gg = Math.round((g / 255) * 230);
            b = 120 + Math.round((g / 255) * 135);
        }
        rgba[4 * i] = r;
        rgba[4 * i + 1] = gg;
        rgba[4 * i + 2] = b;
        rgba[4 * i + 3] = 255;
    }
    return rgba;
}

/** Draw onto a 2D canvas context at 1:1 scale (pixel buffer put, no resampling). */
export function drawFrame(
    ctx: CanvasRenderingContext2D,
    frame: FramePayload,
    palette: Palette = 'grayscale',
): void {
    const rgba = frameToRGBA(frame, palette);
    // heightfield rows are x (length axis); present the tank lying horizontally
    const image = new ImageData(new Uint8ClampedArray(rgba), frame.ny, frame.nx);
    ctx.putImageData(image, 0, 0);
}
