import type { ColorMode, SessionStatus } from './types.js';

/** Display colors assigned to named selections, in creation order. */
export const SELECTION_PALETTE = [
  '#e41a1c', '#377eb8', '#4daf4a', '#984ea3', '#ff7f00', '#a65628',
];

export interface SelectionEntry {
  name: string;
  size: number;
  color: string;
}

export interface UiState {
  sessionId: string | null;
  fit: { state: SessionStatus['state']; epoch: number; totalEpochs: number; loss: number | null } | null;
  colorMode: ColorMode;
  /** PC whose loadings are shown beside the map. */
  activeComponent: number;
  selectedComponents: number;
  maxComponents: number;
  selections: SelectionEntry[];
  pendingPair: { a: string | null; b: string | null };
  /** Bumped whenever diagnostics become stale (component-count change);
   * panels showing Q/T2-derived numbers refetch when it moves. */
  snapshotVersion: number;
}

export type Action =
  | { type: 'fit-started'; sessionId: string; totalEpochs: number }
  | { type: 'session-opened'; sessionId: string }
  | { type: 'fit-progress'; status: SessionStatus }
  | { type: 'fit-finished' }
  | { type: 'fit-failed' }
  | { type: 'pca-loaded'; selectedComponents: number; maxComponents: number }
  | { type: 'color-mode-set'; mode: ColorMode }
  | { type: 'active-component-set'; index: number }
  | { type: 'components-committed'; count: number }
  | { type: 'selection-added'; name: string; size: number }
  | { type: 'pair-slot-picked'; slot: 'a' | 'b'; name: string }
  | { type: 'pair-cleared' };

export function initialState(): UiState {
  return {
    sessionId: null,
    fit: null,
    colorMode: { kind: 'pc_score', index: 0 },
    activeComponent: 0,
    selectedComponents: 1,
    maxComponents: 1,
    selections: [],
    pendingPair: { a: null, b: null },
    snapshotVersion: 0,
  };
}

export function canStartFit(state: UiState): boolean {
  return state.fit === null || state.fit.state !== 'fitting';
}

export function reduce(state: UiState, action: Action): UiState {
  switch (action.type) {
    case 'fit-started': {
      if (!canStartFit(state)) {
        return state; // at most one fit in flight per session
      }
      return {
        ...initialState(),
        sessionId: action.sessionId,
        fit: { state: 'fitting', epoch: 0, totalEpochs: action.totalEpochs, loss: null },
      };
    }
    case 'session-opened': {
      // attach to an already-fitted session (e.g. the bundled demo) - no fit
      if (!canStartFit(state)) return state;
      return {
        ...initialState(),
        sessionId: action.sessionId,
        fit: { state: 'ready', epoch: 0, totalEpochs: 0, loss: null },
      };
    }
    case 'fit-progress': {
      if (!state.fit) return state;
      return {
        ...state,
        fit: {
          state: action.status.state,
          epoch: action.status.epoch,
          totalEpochs: action.status.total_epochs,
          loss: action.status.loss,
        },
      };
    }
    case 'fit-finished':
      return state.fit
        ? { ...state, fit: { ...state.fit, state: 'ready' } }
        : state;
    case 'fit-failed':
      return state.fit
        ? { ...state, fit: { ...state.fit, state: 'failed' } }
        : state;
    case 'pca-loaded':
      return {
        ...state,
        selectedComponents: action.selectedComponents,
        maxComponents: action.maxComponents,
        activeComponent: Math.min(state.activeComponent, action.selectedComponents - 1),
      };
    case 'color-mode-set':
      return { ...state, colorMode: action.mode };
    case 'active-component-set': {
      const index = Math.max(0, Math.min(action.index, state.selectedComponents - 1));
      return { ...state, activeComponent: index };
    }
    case 'components-committed': {
      const count = Math.max(1, Math.min(action.count, state.maxComponents));
      return {
        ...state,
        selectedComponents: count,
        activeComponent: Math.min(state.activeComponent, count - 1),
        // Q/T2 panels are stale now; force refetch
        snapshotVersion: state.snapshotVersion + 1,
      };
    }
    case 'selection-added': {
      const existing = state.selections.findIndex((s) => s.name === action.name);
      const color =
        existing >= 0
          ? state.selections[existing].color
          : SELECTION_PALETTE[state.selections.length % SELECTION_PALETTE.length];
      const entry = { name: action.name, size: action.size, color };
      const selections =
        existing >= 0
          ? state.selections.map((s, i) => (i === existing ? entry : s))
          : [...state.selections, entry];
      return { ...state, selections };
    }
    case 'pair-slot-picked':
      return {
        ...state,
        pendingPair: { ...state.pendingPair, [action.slot]: action.name },
      };
    case 'pair-cleared':
      return { ...state, pendingPair: { a: null, b: null } };
  }
}
