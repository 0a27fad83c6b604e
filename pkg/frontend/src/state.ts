import type {
    ConnectionStatus,
    EmotionPayload,
    FramePayload,
    Phase,
    PhasePayload,
    SessionEvent,
} from './types.js';
import { applyTranscriptEvent, emptyTranscript, TranscriptState } from './transcript.js';

export interface ViewState {
    sessionId: string | null;
    phase: Phase;
    round: number;
    transcript: TranscriptState;
    latestFrame: FramePayload | null;
    framesRendered: number;
    emotion: EmotionPayload | null;
    connection: ConnectionStatus;
    sealed: boolean;
    notice: string | null;
}

export function initialState(): ViewState {
    return {
        sessionId: null,
        phase: 'idle',
        round: 0,
        transcript: emptyTranscript(),
        latestFrame: null,
        framesRendered: 0,
        emotion: null,
        connection: 'connecting',
        sealed: false,
        notice: null,
    };
}

/**
 * Single serialized update path: every gateway event flows through here.
 * The rendered phase is always exactly the last phase_changed received.
 */
export function reduce(state: ViewState, ev: SessionEvent): ViewState {
    switch (ev.kind) {
        case 'phase_changed': {
            const p = ev.payload as PhasePayload;
            return { ...state, phase: p.phase, round: p.round };
        }
        case 'frame': {
            const p = ev.payload as FramePayload;
            return { ...state, latestFrame: p, framesRendered: state.framesRendered + 1 };
        }
        case 'emotion':
            return { ...state, emotion: ev.payload as EmotionPayload };
        case 'sealed':
            return { ...state, sealed: true };
        case 'agent_token':
        case 'utterance':
        case 'error':
            return { ...state, transcript: applyTranscriptEvent(state.transcript, ev) };
        default:
            return state;
    }
}
