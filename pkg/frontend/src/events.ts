import type { SessionEvent } from './types.js';

/** Split an incoming byte/text stream into parsed JSON-lines events. */
export async function* parseJsonLines(
    chunks: AsyncIterable<string | Uint8Array>,
): AsyncGenerator<SessionEvent> {
    const decoder = new TextDecoder();
    let buf = '';
    for await (const chunk of chunks) {
        buf += typeof chunk === 'string' ? chunk : decoder.decode(chunk, { stream: true });
        let nl: number;
        while ((nl = buf.indexOf('\n')) >= 0) {
            const line = buf.slice(0, nl).trim();
            buf = buf.slice(nl + 1);
            if (line) yield JSON.parse(line) as SessionEvent;
        }
    }
    const tail = buf.trim();
    if (tail) yield JSON.parse(tail) as SessionEvent;
}

export type StreamOpener = (since: number) => Promise<AsyncIterable<string | Uint8Array>>;

export interface SubscribeOptions {
    maxReconnects?: number;
    onReconnect?: (since: number) => void;
}

/**
 * Consume the event stream with seq-based dedup and resume.
 *
 * `open(since)` connects to `/sessions/{id}/events?since=...`; on a dropped
 * connection we reconnect from the last seq actually seen, and any event
 * replayed by the server is dropped here, so downstream consumers observe
 * each seq exactly once, in order.
 */
export async function* subscribe(
    open: StreamOpener,
    opts: SubscribeOptions = {},
): AsyncGenerator<SessionEvent> {
    const maxReconnects = opts.maxReconnects ?? 5;
    let lastSeq = -1;
    let attempts = 0;
    for (;;) {
        let stream: AsyncIterable<string | Uint8Array>;
        try {
            stream = await open(lastSeq);
        } catch (err) {
            if (++attempts > maxReconnects) throw err;
            opts.onReconnect?.(lastSeq);
            continue;
        }
        try {
            for await (const ev of parseJsonLines(stream)) {
                if (ev.seq <= lastSeq) continue; // replayed on resume
                lastSeq = ev.seq;
                yield ev;
                if (ev.kind === 'sealed') attempts = 0;
            }
            return; // server closed cleanly after the final event
        } catch (err) {
            if (++attempts > maxReconnects) throw err;
            opts.onReconnect?.(lastSeq);
        }
    }
}
