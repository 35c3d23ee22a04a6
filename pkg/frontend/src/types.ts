/** Wire types of the label-service HTTP contract. */

export type QualityLevel = "high" | "medium" | "low" | "false_negative";

export const QUALITY_LEVELS: QualityLevel[] = [
  "high",
  "medium",
  "low",
  "false_negative",
];

export interface RunDescriptor {
  run_id: string;
  task: string;
  instruction: string;
}

export interface NextBatch {
  runs: RunDescriptor[];
  session_done: number;
  session_cap: number;
  total_pending: number;
}

export interface ObjectTrack {
  role: string;
  half_extents: number[];
  positions: number[][];
}

export interface RunView {
  run_id: string;
  task: string;
  instruction: string;
  steps: number;
  dt: number;
  media_url: string | null;
  tcp: number[][] | null;
  objects: Record<string, ObjectTrack>;
}

export interface LabelSubmission {
  run_id: string;
  annotator_id: string;
  label: QualityLevel;
  session_id: string;
}

export interface SubmitAck {
  status: string;
  seq: number;
  overwrote: boolean;
}

export interface AgreementView {
  annotator_a: string;
  annotator_b: string;
  kappa: number;
  observed_agreement: number;
  n_items: number;
  disagreements: Record<string, string>[];
}

export interface ExportedLabel {
  run_id: string;
  annotator_id: string;
  label: QualityLevel;
  timestamp: number;
  session_id: string;
}

export interface LabelExport {
  labels: ExportedLabel[];
  resolutions: Record<string, { label: QualityLevel; resolver_id: string | null }>;
  unresolved: string[];
}
