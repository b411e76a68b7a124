import { describe, expect, it } from 'vitest';

import { clampTau, previewQueueSize } from '../src/threshold';
import type { Digest, QueueItem } from '../src/types';

function digest(queued: number, autoIn: number, autoEx: number, tau = 0.75): Digest {
  return {
    period: '2024-W01',
    queued,
    reviewed: 0,
    auto_included: autoIn,
    auto_excluded: autoEx,
    tau,
    pending_human_minutes: queued * 0.2,
  };
}

function queue(...confidences: number[]): QueueItem[] {
  return confidences.map((confidence, i) => ({
    doc_id: `d${i}`,
    title: `t${i}`,
    abstract: '',
    verdict: 'include' as const,
    confidence,
    enqueued_at: '',
  }));
}

describe('boundary previews', () => {
  it('slider at 0.5 previews zero queued', () => {
    const p = previewQueueSize(0.5, queue(0.6, 0.7), digest(2, 5, 3));
    expect(p.queued).toBe(0);
    expect(p.exact).toBe(true);
  });

  it('slider at 1.0 previews all undecided model-routed docs', () => {
    const p = previewQueueSize(1.0, queue(0.6, 0.7), digest(2, 5, 3));
    expect(p.queued).toBe(10); // queued + auto included + auto excluded
    expect(p.exact).toBe(true);
  });
});

describe('intermediate previews', () => {
  it('counts known queue confidences exactly when lowering', () => {
    const p = previewQueueSize(0.65, queue(0.6, 0.7, 0.9), digest(3, 4, 4, 0.95));
    expect(p.queued).toBe(1);
    expect(p.exact).toBe(true);
  });

  it('marks a raise above the current threshold as a lower bound', () => {
    const p = previewQueueSize(0.9, queue(0.6, 0.7), digest(2, 4, 4, 0.75));
    expect(p.queued).toBe(2);
    expect(p.exact).toBe(false);
  });
});

describe('clamp', () => {
  it('restricts the slider to the legal range', () => {
    expect(clampTau(0.2)).toBe(0.5);
    expect(clampTau(1.7)).toBe(1.0);
    expect(clampTau(0.8)).toBe(0.8);
  });
});
