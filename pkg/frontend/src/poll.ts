export interface PollerOptions {
  baseMs: number;
  maxMs: number;
}

export interface PollerHooks {
  onError?: (err: unknown) => void;
  onRecover?: () => void;
}

/**
 * Repeating timer with exponential idle backoff.
 *
 * The tick callback reports whether anything changed: activity snaps the
 * interval back to the base, an idle tick doubles it up to the cap, and a
 * thrown error backs off the same way while flagging the failure so the
 * caller can show a stale-data banner.
 */
export class Poller {
  interval: number;
  private timer: ReturnType<typeof setTimeout> | null = null;
  private stopped = true;
  private failing = false;

  constructor(
    private tick: () => Promise<boolean>,
    private opts: PollerOptions = { baseMs: 1000, maxMs: 10000 },
    private hooks: PollerHooks = {},
  ) {
    this.interval = opts.baseMs;
  }

  start(): void {
    if (!this.stopped) return;
    this.stopped = false;
    this.schedule(0);
  }

  stop(): void {
    this.stopped = true;
    if (this.timer !== null) {
      clearTimeout(this.timer);
      this.timer = null;
    }
  }

  private schedule(delay: number): void {
    this.timer = setTimeout(() => void this.run(), delay);
  }

  private async run(): Promise<void> {
    if (this.stopped) return;
    let activity = false;
    let failed = false;
    try {
      activity = await this.tick();
    } catch (err) {
      failed = true;
      this.hooks.onError?.(err);
    }
    if (!failed && this.failing) {
      this.hooks.onRecover?.();
    }
    this.failing = failed;
    this.interval = activity && !failed ? this.opts.baseMs : Math.min(this.interval * 2, this.opts.maxMs);
    if (!this.stopped) this.schedule(this.interval);
  }
}
