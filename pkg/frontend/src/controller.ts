import { ApiError, NetworkError, ReviewApi } from './api';
import { SessionStats } from './session';
import type { Digest, ReviewCard, Verdict } from './types';

export interface ViewState {
  cards: ReviewCard[];
  focusIndex: number;
  remaining: number;
  reviewedThisSession: number;
  averageSecondsPerDecision: number | null;
  toast: string | null;
  banner: string | null;
  allCaughtUp: boolean;
  posting: boolean;
}

/**
 * Queue flow independent of the DOM: the render layer subscribes and draws
 * whatever state it is handed.  Decisions are optimistic (the card leaves
 * immediately) and roll back on failure; a 409 means the server has moved
 * on, so the queue is refreshed instead of retried.
 */
export class ReviewController {
  private cards: ReviewCard[] = [];
  private focusIndex = 0;
  private toast: string | null = null;
  private banner: string | null = null;
  private posting = false;
  private lastDecided: ReviewCard | null = null;
  private session: SessionStats;
  private listeners: Array<(state: ViewState) => void> = [];

  constructor(
    private api: ReviewApi,
    private reviewerId?: string,
    now?: () => number,
  ) {
    this.session = new SessionStats(now);
  }

  subscribe(listener: (state: ViewState) => void): void {
    this.listeners.push(listener);
  }

  state(): ViewState {
    return {
      cards: [...this.cards],
      focusIndex: this.focusIndex,
      remaining: this.cards.length,
      reviewedThisSession: this.session.reviewedThisSession,
      averageSecondsPerDecision: this.session.averageSecondsPerDecision,
      toast: this.toast,
      banner: this.banner,
      allCaughtUp: this.cards.length === 0,
      posting: this.posting,
    };
  }

  private emit(): void {
    const snapshot = this.state();
    for (const listener of this.listeners) listener(snapshot);
  }

  get focusedCard(): ReviewCard | null {
    return this.cards[this.focusIndex] ?? null;
  }

  /** Reload the queue; the most uncertain item (served first) gets focus. */
  async refresh(): Promise<void> {
    try {
      const items = await this.api.getQueue();
      this.cards = items.map((item, i) => ({ ...item, position: i + 1 }));
      this.focusIndex = Math.min(this.focusIndex, Math.max(this.cards.length - 1, 0));
      this.banner = null;
    } catch (err) {
      if (err instanceof NetworkError) {
        this.banner = 'Service unreachable. Check the connection and retry.';
      } else {
        this.banner = `Could not load the queue: ${(err as Error).message}`;
      }
    }
    this.emit();
  }

  /** One keystroke, one POST.  Returns once the outcome is known. */
  async decide(verdict: Verdict): Promise<void> {
    const card = this.focusedCard;
    if (card === null || this.posting) return;
    this.posting = true;
    // optimistic: the card leaves the deck immediately
    const index = this.focusIndex;
    this.cards.splice(index, 1);
    this.focusIndex = Math.min(index, Math.max(this.cards.length - 1, 0));
    this.toast = null;
    this.emit();
    try {
      await this.api.postDecision(card.doc_id, verdict, this.reviewerId);
      this.session.recordDecision();
      this.lastDecided = card;
    } catch (err) {
      if (err instanceof ApiError && err.status === 409) {
        // the server already settled this document: sync, do not retry
        this.toast = `"${card.title}" was already decided elsewhere; queue refreshed.`;
        await this.refreshSilently();
      } else if (err instanceof ApiError && err.status === 404) {
        this.toast = `"${card.title}" no longer exists; queue refreshed.`;
        await this.refreshSilently();
      } else {
        // rollback: the decision was not recorded anywhere
        this.cards.splice(index, 0, card);
        this.focusIndex = index;
        this.banner = 'Decision not saved: service unreachable. Retry.';
      }
    } finally {
      this.posting = false;
      this.emit();
    }
  }

  private async refreshSilently(): Promise<void> {
    try {
      const items = await this.api.getQueue();
      this.cards = items.map((item, i) => ({ ...item, position: i + 1 }));
      this.focusIndex = Math.min(this.focusIndex, Math.max(this.cards.length - 1, 0));
    } catch {
      this.banner = 'Service unreachable. Check the connection and retry.';
    }
  }

  /** Bring the last decided card back into view so it can be re-decided.
   * The follow-up keystroke re-posts; the service treats an identical
   * verdict as a no-op and rejects a changed one with 409 (handled above). */
  undo(): void {
    if (this.lastDecided === null) return;
    this.cards.splice(this.focusIndex, 0, this.lastDecided);
    this.lastDecided = null;
    this.emit();
  }

  next(): void {
    if (this.focusIndex < this.cards.length - 1) {
      this.focusIndex += 1;
      this.emit();
    }
  }

  prev(): void {
    if (this.focusIndex > 0) {
      this.focusIndex -= 1;
      this.emit();
    }
  }

  async stats(): Promise<Digest> {
    return this.api.getStats();
  }

  /** Commit a new threshold; session stats survive the queue re-fetch. */
  async commitThreshold(tau: number): Promise<void> {
    try {
      await this.api.putThreshold(tau);
      await this.refreshSilently();
      this.toast = `Threshold set to ${tau.toFixed(2)}.`;
    } catch (err) {
      if (err instanceof ApiError) {
        this.toast = `Threshold rejected: ${err.message}`;
      } else {
        this.banner = 'Service unreachable. Threshold unchanged.';
      }
    }
    this.emit();
  }
}
