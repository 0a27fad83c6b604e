/** Scripted in-memory gateway: serves a fixed event log over a fetch-shaped API. */

import type { FetchLike } from '../src/gateway.js';
import type { SessionEvent } from '../src/types.js';

export function grayB64(nx: number, ny: number, value: number): string {
    return Buffer.from(new Uint8Array(nx * ny).fill(value)).toString('base64');
}

let seqCounter = 0;

export function resetSeq(): void {
    seqCounter = 0;
}

export function ev(kind: SessionEvent['kind'], payload: unknown): SessionEvent {
    return { seq: seqCounter++, kind, t: seqCounter / 10, payload };
}

/** The canonical mock session: all phases, six round-1 lanes, one summary. */
export function scriptedSession(): SessionEvent[] {
    resetSeq();
    const events: SessionEvent[] = [];
    events.push(ev('phase_changed', { phase: 'confession', round: 0 }));
    events.push(ev('phase_changed', { phase: 'contemplation', round: 0 }));
    events.push(ev('emotion', {
        scores: { sad: 0.6, neutral: 0.2, happy: 0.05, angry: 0.05, fearful: 0.05, disgusted: 0.02, surprised: 0.03 },
        band: [20, 40], freq: 32.0,
    }));
    for (let i = 0; i < 4; i++) {
        events.push(ev('frame', { t: i / 10, nx: 4, ny: 3, min: 0, max: 0, gray_b64: grayB64(4, 3, 128) }));
    }
    events.push(ev('phase_changed', { phase: 'response', round: 1 }));
    for (const word of ['the', 'water', 'listens']) {
        for (let agent = 0; agent < 6; agent++) {
            events.push(ev('agent_token', { agent_id: agent, round: 1, delta: `${word}${agent} ` }));
        }
    }
    for (let agent = 0; agent < 6; agent++) {
        events.push(ev('utterance', { agent_id: agent, round: 1, text: `the${agent} water${agent} listens${agent}` }));
    }
    events.push(ev('agent_token', { agent_id: 2, round: 3, delta: 'chosen reply' }));
    events.push(ev('utterance', { agent_id: 2, round: 3, text: 'chosen reply' }));
    events.push(ev('agent_token', { agent_id: 6, round: 4, delta: 'a closing murmur' }));
    events.push(ev('utterance', { agent_id: 6, round: 4, text: 'a closing murmur' }));
    events.push(ev('phase_changed', { phase: 'release', round: 0 }));
    for (let i = 0; i < 3; i++) {
        events.push(ev('frame', { t: 1 + i / 10, nx: 4, ny: 3, min: -1e-5, max: 1e-5, gray_b64: grayB64(4, 3, 100 + i) }));
    }
    events.push(ev('sealed', { session_id: 'mock', key_id: 'default', artifacts: ['waveset.json'] }));
    events.push(ev('phase_changed', { phase: 'complete', round: 0 }));
    return events;
}

export interface MockOptions {
    /** After serving this many lines, sever the connection once. */
    dropAfter?: number;
    /** Re-serve the last N events before `since` on resume (tests dedup). */
    replayOverlap?: number;
}

export class MockGateway {
    confessed = new Set<string>();
    requests: string[] = [];
    private dropped = false;

    constructor(private events: SessionEvent[], private opts: MockOptions = {}) {}

    private stream(since: number): ReadableStream<Uint8Array> {
        const overlap = this.dropped ? (this.opts.replayOverlap ?? 2) : 0;
        const from = Math.max(since - overlap, -1);
        const pending = this.events.filter((e) => e.seq > from);
        const shouldDrop = !this.dropped && this.opts.dropAfter !== undefined;
        const dropAfter = this.opts.dropAfter ?? Infinity;
        const encoder = new TextEncoder();
        let served = 0;
        const self = this;
        return new ReadableStream<Uint8Array>({
            pull(controller) {
                if (shouldDrop && served >= dropAfter) {
                    self.dropped = true;
                    controller.error(new Error('connection reset'));
                    return;
                }
                const next = pending.shift();
                if (!next) {
                    controller.close();
                    return;
                }
                served++;
                controller.enqueue(encoder.encode(JSON.stringify(next) + '\n'));
            },
        });
    }

    fetch: FetchLike = async (url, init) => {
        this.requests.push(`${init?.method ?? 'GET'} ${url}`);
        const u = new URL(url, 'http://mock');
        if (u.pathname === '/sessions' && init?.method === 'POST') {
            return jsonResponse(201, { session_id: 'mock', phase: 'idle' });
        }
        const confess = u.pathname.match(/^\/sessions\/([^/]+)\/confession$/);
        if (confess && init?.method === 'POST') {
            const sid = confess[1]!;
            if (this.confessed.has(sid)) {
                return jsonResponse(409, { detail: 'already confessed' });
            }
            this.confessed.add(sid);
            return jsonResponse(200, { session_id: sid, accepted: true });
        }
        const events = u.pathname.match(/^\/sessions\/([^/]+)\/events$/);
        if (events) {
            const since = Number(u.searchParams.get('since') ?? '-1');
            return new Response(this.stream(since), { status: 200 });
        }
        return jsonResponse(404, { detail: 'not found' });
    };
}

function jsonResponse(status: number, body: unknown): Response {
    return new Response(JSON.stringify(body), {
        status,
        headers: { 'content-type': 'application/json' },
    });
}
