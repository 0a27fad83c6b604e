import { StreamOpener, subscribe, SubscribeOptions } from './events.js';
import type { SessionEvent } from './types.js';

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ConfessionRejected extends Error {
    constructor(public status: number, message: string) {
        super(message);
    }
}

/** Thin client over the gateway's documented endpoints; nothing else. */
export class GatewayClient {
    constructor(
        private baseUrl: string,
        private fetchImpl: FetchLike = (...args) => fetch(...args),
    ) {}

    async createSession(): Promise<string> {
        const resp = await this.fetchImpl(`${this.baseUrl}/sessions`, { method: 'POST' });
        if (!resp.ok) throw new Error(`create session failed: ${resp.status}`);
        const body = (await resp.json()) as { session_id: string };
        return body.session_id;
    }

    async submitText(sessionId: string, text: string): Promise<void> {
        const resp = await this.fetchImpl(`${this.baseUrl}/sessions/${sessionId}/confession`, {
            method: 'POST',
            headers: { 'content-type': 'application/json' },
            body: JSON.stringify({ text }),
        });
        if (resp.status === 409) {
            throw new ConfessionRejected(409, 'session already confessed');
        }
        if (!resp.ok) throw new ConfessionRejected(resp.status, `submit failed: ${resp.status}`);
    }

    async submitAudio(sessionId: string, wavBytes: ArrayBuffer): Promise<void> {
        const resp = await this.fetchImpl(`${this.baseUrl}/sessions/${sessionId}/confession`, {
            method: 'POST',
            headers: { 'content-type': 'audio/wav' },
            body: wavBytes,
        });
        if (resp.status === 409) {
            throw new ConfessionRejected(409, 'session already confessed');
        }
        if (!resp.ok) throw new ConfessionRejected(resp.status, `submit failed: ${resp.status}`);
    }

    events(sessionId: string, opts: SubscribeOptions = {}): AsyncGenerator<SessionEvent> {
        const open: StreamOpener = async (since) => {
            const resp = await this.fetchImpl(
                `${this.baseUrl}/sessions/${sessionId}/events?since=${since}`);
            if (!resp.ok || !resp.body) throw new Error(`event stream failed: ${resp.status}`);
            return resp.body as unknown as AsyncIterable<Uint8Array>;
        };
        return subscribe(open, opts);
    }

    artifactUrl(sessionId: string, name: string): string {
        return `${this.baseUrl}/sessions/${sessionId}/artifacts/${name}`;
    }
}
