import { ApiError, ReviewApiClient } from './client.js';
import type { Decision, ReviewItem, VerdictLabel } from './types.js';
import {
  clampK,
  renderConfirmation,
  renderErrorBanner,
  renderItemDetail,
  renderQueue,
  renderTraceHits,
} from './views.js';

type View = 'queue' | 'detail' | 'traces';

interface AppState {
  view: View;
  items: ReviewItem[];
  openItem: ReviewItem | null;
  pendingDecision: Decision | null;
  submitting: boolean;
  error: string | null;
}

/** The review console. All state of record lives on the server; this class
 * only caches what is currently on screen. */
export class ReviewApp {
  private state: AppState = {
    view: 'queue',
    items: [],
    openItem: null,
    pendingDecision: null,
    submitting: false,
    error: null,
  };

  constructor(
    private readonly root: HTMLElement,
    private readonly client: ReviewApiClient,
  ) {
    root.addEventListener('click', (event) => this.onClick(event));
  }

  async start(): Promise<void> {
    await this.refreshQueue();
  }

  async refreshQueue(): Promise<void> {
    try {
      this.state.items = await this.client.fetchQueue('pending');
      this.state.error = null;
    } catch (err) {
      this.state.error = describe(err);
    }
    this.state.view = 'queue';
    this.state.openItem = null;
    this.state.pendingDecision = null;
    this.render();
  }

  async searchTraces(query: string, k: number): Promise<void> {
    this.state.view = 'traces';
    try {
      const hits = await this.client.searchTraces(query, clampK(k));
      this.state.error = null;
      this.renderShell(renderTraceHits(hits));
    } catch (err) {
      this.state.error = describe(err);
      this.render();
    }
  }

  private openDetail(itemId: string): void {
    const item = this.state.items.find((i) => i.item_id === itemId);
    if (!item) return;
    this.state.view = 'detail';
    this.state.openItem = item;
    this.state.pendingDecision = null;
    this.render();
  }

  private requestDecision(decision: Decision): void {
    // confirmation step: nothing is posted until the reviewer confirms
    this.state.pendingDecision = decision;
    this.render();
  }

  private async confirmDecision(): Promise<void> {
    const item = this.state.openItem;
    const decision = this.state.pendingDecision;
    if (!item || !decision || this.state.submitting) return;
    this.state.submitting = true;
    this.render();
    try {
      await this.client.submitDecision(item.item_id, decision);
      this.state.submitting = false;
      await this.refreshQueue();
    } catch (err) {
      this.state.submitting = false;
      if (err instanceof ApiError && err.status === 409) {
        // someone else decided first; the queue is the source of truth
        await this.refreshQueue();
        return;
      }
      this.state.error = describe(err);
      this.render();
    }
  }

  private onClick(event: Event): void {
    const target = event.target as HTMLElement;
    const action = target.dataset['action'];
    if (!action) return;
    if (action === 'open' && target.dataset['itemId']) {
      this.openDetail(target.dataset['itemId']);
    } else if (action === 'back' || action === 'retry' || action === 'show-queue') {
      void this.refreshQueue();
    } else if (action === 'approve') {
      this.requestDecision({ decision: 'approve', note: this.noteValue() });
    } else if (action === 'override') {
      const label = this.correctedLabel();
      if (!label) {
        this.state.error = 'Choose a corrected label before overriding.';
        this.render();
        return;
      }
      this.requestDecision({ decision: 'override', corrected_label: label, note: this.noteValue() });
    } else if (action === 'confirm') {
      void this.confirmDecision();
    } else if (action === 'cancel') {
      this.state.pendingDecision = null;
      this.render();
    } else if (action === 'show-traces') {
      const query = this.inputValue('trace-query');
      const k = Number(this.inputValue('trace-k') || '5');
      if (query) void this.searchTraces(query, k);
    }
  }

  private noteValue(): string | undefined {
    const note = this.inputValue('note');
    return note === '' ? undefined : note;
  }

  private correctedLabel(): VerdictLabel | null {
    const value = this.inputValue('corrected-label');
    return value === 'Equivalent' || value === 'NonEquivalent' ? value : null;
  }

  private inputValue(field: string): string {
    const el = this.root.querySelector<HTMLInputElement>(`[data-field="${field}"]`);
    return el ? el.value.trim() : '';
  }

  private render(): void {
    let body: string;
    if (this.state.view === 'detail' && this.state.openItem) {
      body = renderItemDetail(this.state.openItem);
      if (this.state.pendingDecision) {
        const d = this.state.pendingDecision;
        const summary =
          d.decision === 'approve'
            ? `Approve ${this.state.openItem.item_id}?`
            : `Override ${this.state.openItem.item_id} to ${d.corrected_label}?`;
        body += renderConfirmation(this.state.openItem.item_id, summary);
      }
    } else if (this.state.view === 'traces') {
      body = '<p class="empty-state">Enter a query to search stored traces.</p>';
    } else {
      body = renderQueue(this.state.items);
    }
    this.renderShell(body);
  }

  private renderShell(body: string): void {
    const banner = this.state.error ? renderErrorBanner(this.state.error) : '';
    this.root.innerHTML = `
      <nav class="tabs">
        <button type="button" data-action="show-queue">Queue</button>
        <span class="trace-controls">
          <input type="text" data-field="trace-query" placeholder="search stored traces">
          <input type="number" data-field="trace-k" min="1" max="20" value="5">
          <button type="button" data-action="show-traces">Search</button>
        </span>
      </nav>
      ${banner}
      <main${this.state.submitting ? ' class="submitting" inert' : ''}>${body}</main>`;
  }
}

function describe(err: unknown): string {
  if (err instanceof ApiError) return `${err.code}: ${err.message}`;
  if (err instanceof Error) return `Cannot reach the review service (${err.message}).`;
  return 'Cannot reach the review service.';
}

export function mount(root: HTMLElement, baseUrl: string): ReviewApp {
  const app = new ReviewApp(root, new ReviewApiClient(baseUrl));
  void app.start();
  return app;
}
