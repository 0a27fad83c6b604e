import type { SessionEvent, TokenPayload, UtterancePayload } from './types.js';

export interface LaneEntry {
    round: number;
    text: string;
    finalized: boolean;
}

export interface Lane {
    agentId: number;
    entries: LaneEntry[];
    errors: string[];
}

export interface TranscriptState {
    round: number;
    banners: string[];
    lanes: Map<number, Lane>;
}

export function emptyTranscript(): TranscriptState {
    return { round: 0, banners: [], lanes: new Map() };
}

function lane(state: TranscriptState, agentId: number): Lane {
    let l = state.lanes.get(agentId);
    if (!l) {
        l = { agentId, entries: [], errors: [] };
        state.lanes.set(agentId, l);
    }
    return l;
}

function entry(l: Lane, round: number): LaneEntry {
    const last = l.entries[l.entries.length - 1];
    if (last && last.round === round && !last.finalized) return last;
    const fresh = { round, text: '', finalized: false };
    l.entries.push(fresh);
    return fresh;
}

function banner(state: TranscriptState, round: number): void {
    if (round > state.round) {
        state.round = round;
        state.banners.push(`· round ${round} ·`);
    }
}

/** Append one stream event; inserts a round banner whenever the round advances. */
export function applyTranscriptEvent(state: TranscriptState, ev: SessionEvent): TranscriptState {
    if (ev.kind === 'agent_token') {
        const p = ev.payload as TokenPayload;
        banner(state, p.round);
        entry(lane(state, p.agent_id), p.round).text += p.delta;
    } else if (ev.kind === 'utterance') {
        const p = ev.payload as UtterancePayload;
        banner(state, p.round);
        const e = entry(lane(state, p.agent_id), p.round);
        e.text = p.text; // the authoritative, truncated form
        e.finalized = true;
    } else if (ev.kind === 'error') {
        const p = ev.payload as { agent_id?: number; message: string };
        if (p.agent_id !== undefined) lane(state, p.agent_id).errors.push(p.message);
    }
    return state;
}
