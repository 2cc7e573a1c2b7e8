// Session state with the revision-safety and latest-params-wins contracts.
//
// Responses can arrive out of order (a slow early request finishing after a
// fast later one). acceptResponse() admits a response only when its revision
// is ahead of what is displayed, so the UI can never regress. applyParams()
// keeps a single request in flight; Apply clicks during a computation stash
// the newest model and send it when the running request settles.

import type { ClassStats, PipelineParams, SessionSummary, UpdateResponse } from "./types.js";
import { cloneParams, validate } from "./params.js";

export interface UiState {
  session: SessionSummary | null;
  form: PipelineParams;
  displayedRevision: number;
  lastResponse: UpdateResponse | null;
  stats: ClassStats | null;
  selectedStage: string;
  selectedScale: number;
  showSilt: boolean;
  showPore: boolean;
  alpha: number;
  inFlight: boolean;
  pending: PipelineParams | null;
}

export function initialState(form: PipelineParams): UiState {
  return {
    session: null,
    form: cloneParams(form),
    displayedRevision: 0,
    lastResponse: null,
    stats: null,
    selectedStage: "overlay",
    selectedScale: 0,
    showSilt: true,
    showPore: true,
    alpha: 0.5,
    inFlight: false,
    pending: null,
  };
}

export function applyEnabled(state: UiState): boolean {
  return state.session !== null && validate(state.form).length === 0;
}

export function exportEnabled(state: UiState): boolean {
  return state.session !== null && state.displayedRevision > 0;
}

/**
 * Admit a params response; returns true when the UI should re-render from
 * it. Stale responses (revision <= what is already displayed) are dropped.
 */
export function acceptResponse(state: UiState, response: UpdateResponse): boolean {
  if (response.revision <= state.displayedRevision && state.displayedRevision > 0) {
    return false;
  }
  state.displayedRevision = response.revision;
  state.lastResponse = response;
  state.stats = response.stats;
  return true;
}

export type SendParams = (params: PipelineParams) => Promise<UpdateResponse>;

/**
 * Serialize Apply requests: at most one in flight, newest parameters win.
 * Every accepted response is passed to onAccepted.
 */
export async function applyParams(
  state: UiState,
  params: PipelineParams,
  send: SendParams,
  onAccepted: (r: UpdateResponse) => void,
  onError: (e: unknown) => void = () => undefined,
): Promise<void> {
  if (state.inFlight) {
    state.pending = cloneParams(params); // supersedes any earlier pending set
    return;
  }
  state.inFlight = true;
  let next: PipelineParams | null = cloneParams(params);
  while (next) {
    const current: PipelineParams = next;
    next = null;
    try {
      const response = await send(current);
      if (acceptResponse(state, response)) {
        onAccepted(response);
      }
    } catch (e) {
      onError(e);
    }
    if (state.pending) {
      next = state.pending;
      state.pending = null;
    }
  }
  state.inFlight = false;
}
