export const MAX_CONFESSION_SECONDS = 15;

export interface ValidationResult {
    ok: boolean;
    reason?: string;
}

/** Empty or whitespace-only text keeps the submit button disabled. */
export function validateText(text: string): ValidationResult {
    if (text.trim().length === 0) return { ok: false, reason: 'confession is empty' };
    return { ok: true };
}

interface WavInfo {
    sampleRate: number;
    durationSeconds: number;
}

/**
 * Minimal RIFF/WAVE header walk: find fmt and data chunks, derive duration.
 * Runs client-side so an over-long recording never leaves the browser.
 */
export function parseWavHeader(bytes: ArrayBuffer): WavInfo {
    const view = new DataView(bytes);
    const tag = (off: number) =>
        String.fromCharCode(view.getUint8(off), view.getUint8(off + 1),
                            view.getUint8(off + 2), view.getUint8(off + 3));
    if (bytes.byteLength < 44 || tag(0) !== 'RIFF' || tag(8) !== 'WAVE') {
        throw new Error('not a WAV file');
    }
    let sampleRate = 0;
    let byteRate = 0;
    let dataBytes = 0;
    let off = 12;
    while (off + 8 <= bytes.byteLength) {
        const id = tag(off);
        const size = view.getUint32(off + 4, true);
        if (id === 'fmt ') {
            sampleRate = view.getUint32(off + 12, true);
            byteRate = view.getUint32(off + 16, true);
        } else if (id === 'data') {
            dataBytes = size;
        }
        off += 8 + size + (size % 2);
    }
    if (!sampleRate || !byteRate || !dataBytes) throw new Error('malformed WAV header');
    return { sampleRate, durationSeconds: dataBytes / byteRate };
}

export function validateAudio(bytes: ArrayBuffer): ValidationResult {
    let info: WavInfo;
    try {
        info = parseWavHeader(bytes);
    } catch (err) {
        return { ok: false, reason: (err as Error).message };
    }
    if (info.durationSeconds > MAX_CONFESSION_SECONDS) {
        return {
            ok: false,
            reason: `recording is ${info.durationSeconds.toFixed(1)} s; the cap is ${MAX_CONFESSION_SECONDS} s`,
        };
    }
    return { ok: true };
}
