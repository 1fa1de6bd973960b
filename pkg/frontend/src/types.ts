// DTOs mirroring the decision service API. All numbers shown in the console
// come from these payloads verbatim; the client never recomputes scores.

export interface DecisionDto {
  sample_id: string;
  label: number;
  label_name: string;
  binary_view: 'normal' | 'malicious' | 'indeterminate';
  T: number;
  I: number;
  F: number;
  abstained: boolean;
  applied_threshold: number;
  policy_version: number;
}

export type ReviewItemStatus = 'pending' | 'confirmed' | 'relabeled';

export interface ReviewItemDto {
  id: string;
  sample_id: string;
  features: number[];
  decision: DecisionDto;
  status: ReviewItemStatus;
  analyst_label: string | null;
  created_at: string;
  resolved_at: string | null;
}

export interface PolicyDto {
  mode: 'GLOBAL' | 'PER_CLASS';
  global_tau: number;
  percentile: number;
  version: number;
  per_class_tau: Record<string, number>;
}

export interface MetricsDto {
  decisions: number;
  abstentions: number;
  pending_reviews: number;
  per_class_flag_rates: Record<string, number>;
  policy_version: number;
  preview: {
    percentile: number;
    projected_flag_rates: Record<string, number>;
  } | null;
}

export type Verdict = { verdict: 'confirm' } | { verdict: 'relabel'; label: string };

export interface ApiErrorBody {
  error: { code: string; message: string };
}
