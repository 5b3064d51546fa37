import type { Catalog, JobInfo, MetricRow, RunConfigBody } from "../src/types.js";

export function fakeCatalog(): Catalog {
  return {
    envs: [
      {
        env_id: "rps",
        n_agents: 2,
        obs_spaces: [{ kind: "discrete", n: 4 }, { kind: "discrete", n: 4 }],
        act_spaces: [{ kind: "discrete", n: 3 }, { kind: "discrete", n: 3 }],
        horizon: 1,
        reward_structure: "zero_sum",
        optimal_return: [0.0, 0.0],
      },
      {
        env_id: "kitchen.pass",
        n_agents: 2,
        obs_spaces: [{ kind: "discrete", n: 8 }, { kind: "discrete", n: 8 }],
        act_spaces: [{ kind: "discrete", n: 3 }, { kind: "discrete", n: 3 }],
        horizon: 40,
        reward_structure: "shared",
        optimal_return: [10.0, 10.0],
      },
      {
        env_id: "trio.fake",
        n_agents: 3,
        obs_spaces: [
          { kind: "discrete", n: 5 },
          { kind: "discrete", n: 5 },
          { kind: "discrete", n: 5 },
        ],
        act_spaces: [
          { kind: "discrete", n: 2 },
          { kind: "discrete", n: 2 },
          { kind: "discrete", n: 2 },
        ],
        horizon: 6,
        reward_structure: "mixed",
        optimal_return: null,
      },
    ],
    algorithms: [
      { algo: "q", uses_critic: false, hyperparams: ["gamma", "lr", "eps"] },
      { algo: "reinforce", uses_critic: false, hyperparams: ["gamma", "lr", "entropy_coef"] },
      { algo: "a2c", uses_critic: true, hyperparams: ["gamma", "gae_lambda", "lr", "entropy_coef", "value_coef"] },
    ],
    sampling_modes: ["round_robin", "uniform_random"],
  };
}

export function makeJob(overrides: Partial<JobInfo> = {}): JobInfo {
  const config: RunConfigBody = {
    mode: "train",
    env_id: "rps",
    master_seed: 1,
    total_timesteps: 500,
    ego: { agent: "learn:q" },
    seats: [{ seat: 1, agents: ["learn:q"], sampling: "round_robin" }],
  };
  return {
    job_id: "job000000001",
    state: "running",
    created: 1000.0,
    started: 1000.5,
    ended: null,
    error: null,
    config,
    artifacts: [],
    result: null,
    ...overrides,
  };
}

export function makeRows(fromSeq: number, toSeq: number, nSeats = 2): MetricRow[] {
  const rows: MetricRow[] = [];
  for (let seq = fromSeq; seq <= toSeq; seq++) {
    rows.push({
      seq,
      env_step: seq * 10,
      episode: seq - 1,
      kind: "episode",
      returns: Array.from({ length: nSeats }, (_, i) => Math.sin(seq / 7 + i)),
      losses: Array.from({ length: nSeats }, () => null),
      job_id: "job000000001",
      wall_clock: 123.0 + seq,
    });
  }
  return rows;
}

export interface FetchCall {
  url: string;
  method: string;
  headers: Record<string, string>;
  body: unknown;
}

export type Route = (call: FetchCall) => { status?: number; payload: unknown } | Promise<{ status?: number; payload: unknown }>;

/** Install a fetch stub routed by "METHOD path"; returns the call log. */
export function stubFetch(routes: Record<string, Route>): FetchCall[] {
  const calls: FetchCall[] = [];
  const impl = async (input: RequestInfo | URL, init?: RequestInit) => {
    const url = String(input);
    const method = init?.method ?? "GET";
    const call: FetchCall = {
      url,
      method,
      headers: (init?.headers ?? {}) as Record<string, string>,
      body: init?.body ? JSON.parse(String(init.body)) : undefined,
    };
    calls.push(call);
    const path = url.replace(/^https?:\/\/[^/]+/, "").split("?")[0];
    const route = routes[`${method} ${path}`];
    if (!route) throw new Error(`no route for ${method} ${path}`);
    const result = await route(call);
    const status = result.status ?? 200;
    return {
      ok: status >= 200 && status < 300,
      status,
      statusText: String(status),
      json: async () => result.payload,
    } as Response;
  };
  globalThis.fetch = impl as typeof fetch;
  return calls;
}
