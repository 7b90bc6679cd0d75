import type { Diagnosis, Exercise } from "./api.js";

// One node per diagnosis in the drill-down tree; children keyed by the
// missing literal whose "why?" produced them.
export interface DiagnosisNode {
  diagnosis: Diagnosis;
  children: Map<string, DiagnosisNode>;
}

export interface HistoryEntry {
  exerciseId: string;
  attempt: string;
  verdict: string;
}

export interface UiState {
  sessionId: string;
  exercises: Exercise[];
  current: Exercise | null;
  attemptText: string;
  tree: DiagnosisNode | null;
  history: HistoryEntry[];
  inspectorVisible: boolean;
  teacherMode: boolean;
  scriptMode: boolean;
  busy: boolean;
  banner: string | null;
}

export function freshState(sessionId: string): UiState {
  return {
    sessionId,
    exercises: [],
    current: null,
    attemptText: "",
    tree: null,
    history: [],
    inspectorVisible: false,
    teacherMode: false,
    scriptMode: false,
    busy: false,
    banner: null,
  };
}
