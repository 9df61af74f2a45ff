/** View state for one practice session. Analysis is only triggerable
 * from a completed, non-empty recording; the trajectory mirrors the
 * server-side session history order. */

import type { AnalysisResult, SentenceEntry } from "./types.js";
import type { RecordingState } from "./recorder.js";

export interface PracticeViewState {
  sentences: SentenceEntry[];
  selectedSentenceId: string | null;
  recordingState: RecordingState;
  latestResult: AnalysisResult | null;
  /** Prior attempts' embedding points, oldest first (latest excluded). */
  trajectory: [number, number][];
  /** Fixed-per-session scatter scale: max observed radius x 1.2. */
  scaleRadius: number;
  errorMessage: string | null;
}

export function initialState(): PracticeViewState {
  return {
    sentences: [],
    selectedSentenceId: null,
    recordingState: "idle",
    latestResult: null,
    trajectory: [],
    scaleRadius: 1.0,
    errorMessage: null,
  };
}

export function canAnalyze(state: PracticeViewState, capturedSamples: number): boolean {
  return (
    state.selectedSentenceId !== null &&
    state.recordingState === "idle" &&
    capturedSamples > 0
  );
}

export function applyResult(
  state: PracticeViewState,
  result: AnalysisResult,
): PracticeViewState {
  const trajectory: [number, number][] = state.latestResult
    ? [...state.trajectory, state.latestResult.point]
    : [...state.trajectory];
  const radius = Math.hypot(result.point[0], result.point[1]);
  return {
    ...state,
    recordingState: "idle",
    latestResult: result,
    trajectory,
    scaleRadius: Math.max(state.scaleRadius, radius * 1.2),
    errorMessage: null,
  };
}

/** A failed analysis keeps the previous result/trajectory on screen. */
export function applyError(
  state: PracticeViewState,
  message: string,
): PracticeViewState {
  return { ...state, recordingState: "idle", errorMessage: message };
}
