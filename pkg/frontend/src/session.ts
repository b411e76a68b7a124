/** Per-session review counters; lost on reload by design (decisions are not). */
export class SessionStats {
  private decisionsAt: number[] = [];
  private startedAt: number;

  constructor(private now: () => number = () => Date.now()) {
    this.startedAt = this.now();
  }

  recordDecision(): void {
    this.decisionsAt.push(this.now());
  }

  get reviewedThisSession(): number {
    return this.decisionsAt.length;
  }

  /** Mean seconds per decision since the session started. */
  get averageSecondsPerDecision(): number | null {
    if (this.decisionsAt.length === 0) return null;
    const last = this.decisionsAt[this.decisionsAt.length - 1];
    return (last - this.startedAt) / 1000 / this.decisionsAt.length;
  }
}
