// Presentational bands over the indeterminacy score:
// low < 0.4 <= medium < 0.7 <= high.

export type SeverityBand = 'low' | 'medium' | 'high';

export function severityBand(indeterminacy: number): SeverityBand {
  if (indeterminacy < 0.4) return 'low';
  if (indeterminacy < 0.7) return 'medium';
  return 'high';
}
