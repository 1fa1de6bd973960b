// Review queue state: polling-driven listing with filter and pagination,
// optimistic verdict submission with rollback, and conflict handling.
// Every server state change goes through exactly one API mutation.

import { ApiClient, ApiError } from './client.js';
import type { ReviewItemDto, ReviewItemStatus, Verdict } from './types.js';

export interface QueueState {
  items: ReviewItemDto[];
  filter: ReviewItemStatus | undefined;
  page: number;
  pageSize: number;
  pendingCount: number;
  connection: 'ok' | 'error';
  notice: string | null;
}

type Listener = (state: QueueState) => void;

export class QueueController {
  private readonly client: ApiClient;
  private readonly listeners = new Set<Listener>();
  private readonly inFlight = new Set<string>();
  private state: QueueState = {
    items: [],
    filter: 'pending',
    page: 1,
    pageSize: 20,
    pendingCount: 0,
    connection: 'ok',
    notice: null,
  };

  constructor(client: ApiClient) {
    this.client = client;
  }

  getState(): QueueState {
    return this.state;
  }

  subscribe(listener: Listener): () => void {
    this.listeners.add(listener);
    listener(this.state);
    return () => this.listeners.delete(listener);
  }

  private setState(patch: Partial<QueueState>): void {
    this.state = { ...this.state, ...patch };
    for (const listener of this.listeners) listener(this.state);
  }

  async refresh(): Promise<void> {
    try {
      const [items, metrics] = await Promise.all([
        this.client.listReview({
          status: this.state.filter,
          page: this.state.page,
          pageSize: this.state.pageSize,
        }),
        this.client.metrics(),
      ]);
      this.setState({
        items,
        pendingCount: metrics.pending_reviews,
        connection: 'ok',
      });
    } catch (err) {
      // keep the last-known rows on screen; surface a retry state instead
      this.setState({ connection: 'error' });
      throw err;
    }
  }

  async setFilter(filter: ReviewItemStatus | undefined): Promise<void> {
    this.setState({ filter, page: 1 });
    await this.refresh();
  }

  async setPage(page: number): Promise<void> {
    this.setState({ page });
    await this.refresh();
  }

  clearNotice(): void {
    this.setState({ notice: null });
  }

  /** Optimistically resolve one row; roll back if the server disagrees. */
  async submitVerdict(itemId: string, verdict: Verdict): Promise<void> {
    if (this.inFlight.has(itemId)) return; // double-submit guard
    const current = this.state.items.find((i) => i.id === itemId);
    if (!current) return;
    if (current.status !== 'pending') return; // already resolved locally

    const optimistic: ReviewItemDto = {
      ...current,
      status: verdict.verdict === 'confirm' ? 'confirmed' : 'relabeled',
      analyst_label: verdict.verdict === 'relabel' ? verdict.label : null,
    };
    const previousItems = this.state.items;
    this.inFlight.add(itemId);
    this.applyRow(optimistic);
    try {
      const resolved = await this.client.submitVerdict(itemId, verdict);
      this.applyRow(resolved);
    } catch (err) {
      if (err instanceof ApiError && err.code === 'ALREADY_RESOLVED') {
        // someone else got there first: say so and re-sync from the server
        this.setState({ notice: `${itemId}: already resolved by another analyst` });
        await this.refresh();
      } else {
        this.setState({ items: previousItems });
        throw err;
      }
    } finally {
      this.inFlight.delete(itemId);
    }
  }

  /** Replace one row; rows leaving the active filter drop from the list. */
  private applyRow(item: ReviewItemDto): void {
    let items = this.state.items.map((i) => (i.id === item.id ? item : i));
    if (this.state.filter && item.status !== this.state.filter) {
      items = items.filter((i) => i.id !== item.id);
    }
    const pendingDelta =
      item.status !== 'pending' &&
      this.state.items.some((i) => i.id === item.id && i.status === 'pending')
        ? -1
        : 0;
    this.setState({
      items,
      pendingCount: Math.max(0, this.state.pendingCount + pendingDelta),
    });
  }
}
