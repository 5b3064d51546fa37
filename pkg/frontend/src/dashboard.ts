import type { ApiClient } from "./api.js";
import { renderChart } from "./chart.js";
import { Poller, type PollerOptions } from "./poll.js";
import type { JobInfo, JobState, MetricRow } from "./types.js";

const TERMINAL: JobState[] = ["succeeded", "failed", "cancelled"];

interface Card {
  el: HTMLElement;
  badge: HTMLElement;
  chart: HTMLElement;
  detail: HTMLElement;
  cancelBtn: HTMLButtonElement;
  rows: MetricRow[];
  cursor: number;
  state: JobState;
  drained: boolean;
}

/**
 * Job cards with live charts, fed exclusively by polling.
 *
 * Each tick lists the session's jobs, then pulls metric rows per job from
 * its cursor; a state change or any new row counts as activity and keeps
 * the poll interval at its base, otherwise the interval backs off.
 */
export class Dashboard {
  cards = new Map<string, Card>();
  poller: Poller;
  private banner: HTMLElement;
  private list: HTMLElement;

  constructor(
    private root: HTMLElement,
    private api: ApiClient,
    pollerOptions: PollerOptions = { baseMs: 1000, maxMs: 10000 },
  ) {
    this.banner = document.createElement("div");
    this.banner.id = "stale-banner";
    this.banner.textContent = "connection lost, data may be stale; retrying";
    this.banner.hidden = true;
    this.root.appendChild(this.banner);
    this.list = document.createElement("div");
    this.list.id = "job-list";
    this.root.appendChild(this.list);
    this.poller = new Poller(() => this.tick(), pollerOptions, {
      onError: () => {
        this.banner.hidden = false;
      },
      onRecover: () => {
        this.banner.hidden = true;
      },
    });
  }

  start(): void {
    this.poller.start();
  }

  stop(): void {
    this.poller.stop();
  }

  /** Show a freshly submitted job without waiting for the next poll. */
  prime(job: JobInfo): void {
    this.upsert(job);
  }

  async tick(): Promise<boolean> {
    let activity = false;
    const jobs = await this.api.listJobs();
    for (const job of jobs) {
      const before = this.cards.get(job.job_id)?.state;
      this.upsert(job);
      if (before !== job.state) activity = true;
    }
    for (const [jobId, card] of this.cards) {
      if (card.drained) continue;
      const rows = await this.api.metricsAfter(jobId, card.cursor);
      if (rows.length > 0) {
        activity = true;
        card.rows.push(...rows);
        card.cursor = rows[rows.length - 1].seq;
        renderChart(card.chart, card.rows);
      } else if (TERMINAL.includes(card.state)) {
        // terminal and no rows left to pull: stop asking
        card.drained = true;
      }
    }
    return activity;
  }

  private upsert(job: JobInfo): void {
    let card = this.cards.get(job.job_id);
    if (!card) {
      card = this.buildCard(job);
      this.cards.set(job.job_id, card);
      this.list.prepend(card.el);
    }
    card.state = job.state;
    card.badge.textContent = job.state;
    card.badge.className = `badge badge-${job.state}`;
    card.cancelBtn.disabled = TERMINAL.includes(job.state);
    card.detail.textContent = this.detailText(job);
  }

  private detailText(job: JobInfo): string {
    const bits = [`${job.config.env_id}`, `seed ${job.config.master_seed}`];
    if (job.error) bits.push(`error: ${job.error}`);
    if (job.result && typeof job.result["env_steps"] === "number") {
      bits.push(`${job.result["env_steps"]} env steps`);
    }
    return bits.join(" | ");
  }

  private buildCard(job: JobInfo): Card {
    const el = document.createElement("article");
    el.className = "job-card";
    el.dataset.jobId = job.job_id;

    const header = document.createElement("header");
    const title = document.createElement("strong");
    title.textContent = job.job_id;
    header.appendChild(title);

    const badge = document.createElement("span");
    badge.className = `badge badge-${job.state}`;
    badge.textContent = job.state;
    header.appendChild(badge);

    const cancelBtn = document.createElement("button");
    cancelBtn.type = "button";
    cancelBtn.className = "cancel-btn";
    cancelBtn.textContent = "Cancel";
    cancelBtn.addEventListener("click", () => void this.cancel(job.job_id));
    header.appendChild(cancelBtn);
    el.appendChild(header);

    const detail = document.createElement("p");
    detail.className = "job-detail";
    el.appendChild(detail);

    const chart = document.createElement("div");
    chart.className = "chart-host";
    renderChart(chart, []);
    el.appendChild(chart);

    return { el, badge, chart, detail, cancelBtn, rows: [], cursor: 0, state: job.state, drained: false };
  }

  private async cancel(jobId: string): Promise<void> {
    try {
      const job = await this.api.cancelJob(jobId);
      this.upsert(job);
    } catch {
      // terminal race or network failure; the next poll settles the badge
    }
  }
}
