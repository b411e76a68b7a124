export type Verdict = 'include' | 'exclude';

export interface QueueItem {
  doc_id: string;
  title: string;
  abstract: string;
  verdict: Verdict;
  confidence: number;
  enqueued_at: string;
}

export interface Digest {
  period: string;
  queued: number;
  reviewed: number;
  auto_included: number;
  auto_excluded: number;
  tau: number;
  pending_human_minutes: number;
}

export interface DecisionOut {
  doc_id: string;
  verdict: Verdict;
  status: string;
}

export interface ThresholdOut {
  tau: number;
  queued: number;
}

export interface ApiErrorBody {
  code: string;
  message: string;
}

/** What a card shows: nothing beyond what GET /queue delivered. */
export interface ReviewCard extends QueueItem {
  position: number;
}
