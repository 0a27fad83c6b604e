/** Browser entry point: wires the form, canvas, and transcript to the gateway. */

import { validateAudio, validateText } from './confession.js';
import { drawFrame, Palette } from './frames.js';
import { ConfessionRejected, GatewayClient } from './gateway.js';
import { initialState, reduce, ViewState } from './state.js';
import type { FramePayload } from './types.js';

const PHASE_LABELS: Record<string, string> = {
    idle: 'waiting',
    confession: 'listening',
    contemplation: 'contemplation',
    response: 'response',
    release: 'release',
    complete: 'still water',
};

function el<T extends HTMLElement>(id: string): T {
    const node = document.getElementById(id);
    if (!node) throw new Error(`missing #${id}`);
    return node as T;
}

function renderTranscript(state: ViewState, root: HTMLElement): void {
    root.textContent = '';
    for (const text of state.transcript.banners) {
        const banner = document.createElement('div');
        banner.className = 'round-banner';
        banner.textContent = text;
        root.appendChild(banner);
    }
    const ordered = [...state.transcript.lanes.values()].sort((a, b) => a.agentId - b.agentId);
    for (const lane of ordered) {
        const div = document.createElement('div');
        div.className = lane.agentId === 6 ? 'lane summary' : 'lane';
        const label = lane.agentId === 6 ? 'chorus' : `voice ${lane.agentId + 1}`;
        div.textContent = `${label}: ${lane.entries.map((e) => e.text).join(' / ')}`;
        for (const msg of lane.errors) {
            const err = document.createElement('span');
            err.className = 'lane-error';
            err.textContent = ` [${msg}]`;
            div.appendChild(err);
        }
        root.appendChild(div);
    }
}

export async function boot(baseUrl = ''): Promise<void> {
    const client = new GatewayClient(baseUrl);
    const canvas = el<HTMLCanvasElement>('surface');
    const ctx = canvas.getContext('2d');
    if (!ctx) throw new Error('canvas 2d context unavailable');
    const phaseEl = el<HTMLElement>('phase');
    const noticeEl = el<HTMLElement>('notice');
    const transcriptEl = el<HTMLElement>('transcript');
    const textInput = el<HTMLTextAreaElement>('confession-text');
    const fileInput = el<HTMLInputElement>('confession-file');
    const submit = el<HTMLButtonElement>('submit');
    const paletteToggle = el<HTMLInputElement>('palette');

    let state = initialState();
    let palette: Palette = 'grayscale';
    paletteToggle.addEventListener('change', () => {
        palette = paletteToggle.checked ? 'dye' : 'grayscale';
        if (state.latestFrame) drawFrame(ctx, state.latestFrame, palette);
    });

    const refreshSubmit = () => {
        submit.disabled = !validateText(textInput.value).ok && !fileInput.files?.length;
    };
    textInput.addEventListener('input', refreshSubmit);
    fileInput.addEventListener('change', refreshSubmit);
    refreshSubmit();

    submit.addEventListener('click', async () => {
        noticeEl.textContent = '';
        try {
            const sessionId = await client.createSession();
            state = { ...state, sessionId };
            const file = fileInput.files?.[0];
            if (file) {
                const bytes = await file.arrayBuffer();
                const check = validateAudio(bytes);
                if (!check.ok) {
                    noticeEl.textContent = check.reason ?? 'rejected';
                    return;
                }
                await client.submitAudio(sessionId, bytes);
            } else {
                const check = validateText(textInput.value);
                if (!check.ok) return;
                await client.submitText(sessionId, textInput.value.trim());
            }
            submit.disabled = true;
            for await (const ev of client.events(sessionId)) {
                state = reduce(state, ev);
                phaseEl.textContent = PHASE_LABELS[state.phase] ?? state.phase;
                if (ev.kind === 'frame') {
                    const frame = ev.payload as FramePayload;
                    canvas.width = frame.ny;
                    canvas.height = frame.nx;
                    drawFrame(ctx, frame, palette);
                } else if (ev.kind !== 'phase_changed') {
                    renderTranscript(state, transcriptEl);
                }
            }
        } catch (err) {
            noticeEl.textContent = err instanceof ConfessionRejected
                ? err.message
                : 'the water is unreachable';
        }
    });
}
