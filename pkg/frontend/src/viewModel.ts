// View models: server payloads plus display helpers. Pure functions of the
// DTOs; no client-side recomputation of any score.

import { severityBand, type SeverityBand } from './severity.js';
import type { ReviewItemDto } from './types.js';

export interface FeatureRow {
  name: string;
  value: number;
}

export interface ReviewViewModel {
  item: ReviewItemDto;
  severity: SeverityBand;
  predictedLabel: string;
  truth: number;
  indeterminacy: number;
  falsity: number;
  featureTable: FeatureRow[];
}

export function toViewModel(item: ReviewItemDto, featureNames?: string[]): ReviewViewModel {
  return {
    item,
    severity: severityBand(item.decision.I),
    predictedLabel: item.decision.label_name,
    truth: item.decision.T,
    indeterminacy: item.decision.I,
    falsity: item.decision.F,
    featureTable: item.features.map((value, i) => ({
      name: featureNames?.[i] ?? `feature_${i}`,
      value,
    })),
  };
}
