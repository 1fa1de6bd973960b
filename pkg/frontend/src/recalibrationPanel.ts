// Threshold recalibration what-if: show the current per-class thresholds,
// preview projected flag rates at a candidate percentile (read-only), and
// apply recalibration as an explicit, separate action.

import { ApiClient, ApiError } from './client.js';
import type { MetricsDto, PolicyDto } from './types.js';

export interface RecalibrationState {
  policy: PolicyDto | null;
  preview: { percentile: number; projectedFlagRates: Record<string, number> } | null;
  error: string | null;
}

type Listener = (state: RecalibrationState) => void;

export class RecalibrationPanel {
  private readonly client: ApiClient;
  private readonly listeners = new Set<Listener>();
  private state: RecalibrationState = { policy: null, preview: null, error: null };

  constructor(client: ApiClient) {
    this.client = client;
  }

  getState(): RecalibrationState {
    return this.state;
  }

  subscribe(listener: Listener): () => void {
    this.listeners.add(listener);
    listener(this.state);
    return () => this.listeners.delete(listener);
  }

  private setState(patch: Partial<RecalibrationState>): void {
    this.state = { ...this.state, ...patch };
    for (const listener of this.listeners) listener(this.state);
  }

  async loadPolicy(): Promise<void> {
    this.setState({ policy: await this.client.policy(), error: null });
  }

  /** Fetch projected flag rates for a candidate percentile; mutates nothing. */
  async preview(percentile: number): Promise<void> {
    const metrics: MetricsDto = await this.client.metrics(percentile);
    this.setState({
      preview: metrics.preview
        ? {
            percentile: metrics.preview.percentile,
            projectedFlagRates: metrics.preview.projected_flag_rates,
          }
        : null,
      error: null,
    });
  }

  /** The one mutating action: install a recalibrated policy. */
  async apply(percentile: number): Promise<void> {
    try {
      const policy = await this.client.recalibrate(percentile);
      this.setState({ policy, error: null });
    } catch (err) {
      if (err instanceof ApiError) {
        // e.g. INSUFFICIENT_DATA: render the server's words verbatim
        this.setState({ error: `${err.code}: ${err.message}` });
        return;
      }
      throw err;
    }
  }
}
