export type Phase =
    | 'idle'
    | 'confession'
    | 'contemplation'
    | 'response'
    | 'release'
    | 'complete';

export type EventKind =
    | 'phase_changed'
    | 'agent_token'
    | 'utterance'
    | 'frame'
    | 'emotion'
    | 'error'
    | 'sealed';

export interface SessionEvent {
    seq: number;
    kind: EventKind;
    t: number;
    payload: unknown;
}

export interface PhasePayload {
    phase: Phase;
    round: number;
}

export interface TokenPayload {
    agent_id: number;
    round: number;
    delta: string;
}

export interface UtterancePayload {
    agent_id: number;
    round: number;
    text: string;
}

export interface FramePayload {
    t: number;
    nx: number;
    ny: number;
    min: number;
    max: number;
    gray_b64: string;
}

export interface EmotionPayload {
    scores: Record<string, number>;
    band: [number, number];
    freq: number;
}

export type ConnectionStatus = 'connecting' | 'open' | 'reconnecting' | 'closed';
