/** Payload shapes served by the analysis HTTP API (schema_version 1). */

export interface DifferenceSegment {
  start_s: number;
  end_s: number;
  intensity: number;
}

export interface AnalysisResult {
  schema_version: number;
  result_id: string;
  sentence_id?: string;
  timestamp_ns?: number;
  score: number;
  display: number;
  predicted_label: string;
  segments: DifferenceSegment[];
  point: [number, number];
  distance: number;
  waveform_preview: number[];
}

export interface SentenceEntry {
  sentence_id: string;
  text: string;
  has_model_audio: boolean;
}

export interface SessionRecord {
  schema_version: number;
  session_id: string;
  sentence_id: string | null;
  results: AnalysisResult[];
}

export interface ApiError {
  code: string;
  message: string;
}
