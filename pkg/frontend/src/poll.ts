// Fixed-interval polling with at most one in-flight request per key; a slow
// or stalled endpoint skips ticks instead of stacking requests.

export class Poller {
  private inflight = new Set<string>();
  private timer: ReturnType<typeof setInterval> | null = null;
  private tasks = new Map<string, () => Promise<void>>();

  constructor(readonly intervalMs: number) {}

  add(key: string, task: () => Promise<void>): void {
    this.tasks.set(key, task);
  }

  remove(key: string): void {
    this.tasks.delete(key);
  }

  async tick(): Promise<void> {
    const runs: Promise<void>[] = [];
    for (const [key, task] of this.tasks) {
      if (this.inflight.has(key)) continue;
      this.inflight.add(key);
      runs.push(task().finally(() => this.inflight.delete(key)));
    }
    await Promise.allSettled(runs);
  }

  start(): void {
    if (this.timer !== null) return;
    void this.tick();
    this.timer = setInterval(() => void this.tick(), this.intervalMs);
  }

  stop(): void {
    if (this.timer !== null) {
      clearInterval(this.timer);
      this.timer = null;
    }
  }
}
