import type { Digest, QueueItem } from './types';

export interface ThresholdPreview {
  tau: number;
  queued: number;
  exact: boolean;
}

/**
 * Queue size preview for a candidate threshold, before committing it.
 *
 * At the bounds the answer is exact: 0.5 routes nothing (confidence is
 * always >= 0.5) and 1.0 routes every model-routed undecided document
 * (queued plus both auto counts from the digest).  Between the bounds the
 * count over the currently queued confidences is exact when lowering the
 * threshold and a lower bound when raising it, since auto-decided
 * confidences are not exposed.
 */
export function previewQueueSize(
  tau: number,
  queue: QueueItem[],
  digest: Digest,
): ThresholdPreview {
  if (tau <= 0.5) {
    return { tau, queued: 0, exact: true };
  }
  if (tau >= 1.0) {
    return {
      tau,
      queued: digest.queued + digest.auto_included + digest.auto_excluded,
      exact: true,
    };
  }
  const below = queue.filter((item) => item.confidence < tau).length;
  return { tau, queued: below, exact: tau <= digest.tau };
}

export function clampTau(tau: number): number {
  return Math.min(1.0, Math.max(0.5, tau));
}
