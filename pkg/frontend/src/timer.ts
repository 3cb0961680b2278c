// Local countdown for the per-question time budget. Purely advisory: the
// server clock decides timeouts, so the countdown re-syncs to the
// server-reported remaining time on every fetch and only ever drifts
// between fetches.

export class Countdown {
  private remainingAtSync: number;
  private syncedAt: number;

  constructor(remainingMs: number, now: number) {
    this.remainingAtSync = remainingMs;
    this.syncedAt = now;
  }

  /** Re-anchor to the server's view of the remaining budget. */
  reconcile(serverRemainingMs: number, now: number): void {
    this.remainingAtSync = serverRemainingMs;
    this.syncedAt = now;
  }

  remaining(now: number): number {
    return Math.max(0, this.remainingAtSync - (now - this.syncedAt));
  }

  expired(now: number): boolean {
    return this.remaining(now) <= 0;
  }

  /** Whole seconds left, as shown next to the question. */
  secondsLeft(now: number): number {
    return Math.ceil(this.remaining(now) / 1000);
  }
}

export function formatSeconds(totalSeconds: number): string {
  const minutes = Math.floor(totalSeconds / 60);
  const seconds = totalSeconds % 60;
  return `${minutes}:${String(seconds).padStart(2, '0')}`;
}
