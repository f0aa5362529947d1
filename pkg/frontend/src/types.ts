// JSON shapes of the /v1 service API, mirrored field for field.

export type VerdictLabel = 'Equivalent' | 'NonEquivalent';
export type DimensionStatus = 'Match' | 'Mismatch' | 'Unknown';
export type ReviewStatus = 'pending' | 'approved' | 'overridden';

export interface ProductPair {
  pair_id: string;
  base_title: string;
  compared_title: string;
}

export interface Question {
  question_id: string;
  pair_id: string;
  text: string;
  dimension: string;
}

export interface Source {
  url: string;
  snippet: string;
}

export interface Answer {
  question_id: string;
  answer_text: string;
  sources: Source[];
  resolved_by: string;
}

export interface Verdict {
  label: VerdictLabel;
  dimension_status: Record<string, DimensionStatus>;
  confidence: number;
  rationale: string;
  provenance: string;
}

export interface MappingResult {
  pair: ProductPair;
  verdict: Verdict;
  questions: Question[];
  answers: Answer[];
  dedup_activated: boolean;
  web_queries_issued: number;
  wall_time_ms: number;
}

export interface ReviewItem {
  item_id: string;
  result: MappingResult;
  status: ReviewStatus;
  reviewer_note: string | null;
  corrected_label: VerdictLabel | null;
  decided_at: number | null;
  reason: string;
}

export interface TraceHit {
  trace_id: number;
  concat_key: string;
  similarity: number;
  validation_status: 'machine' | 'human_validated';
  questions: { pair_id: string; questions: Question[] };
  answers: { pair_id: string; answers: Answer[] };
  created_at: number;
}

export interface Stats {
  pairs_processed: number;
  dedup_activation_rate: number;
  avg_questions_per_pair: number;
  escalated: number;
}

export type Decision =
  | { decision: 'approve'; note?: string }
  | { decision: 'override'; corrected_label: VerdictLabel; note?: string };
