/** Mirrors of the JSON shapes the experiment service serves. */

export interface SpaceInfo {
  kind: "discrete" | "box";
  n?: number;
  low?: number[];
  high?: number[];
}

export interface EnvInfo {
  env_id: string;
  n_agents: number;
  obs_spaces: SpaceInfo[];
  act_spaces: SpaceInfo[];
  horizon: number;
  reward_structure: string;
  optimal_return: number[] | null;
}

export interface AlgoInfo {
  algo: string;
  uses_critic: boolean;
  hyperparams: string[];
}

export interface Catalog {
  envs: EnvInfo[];
  algorithms: AlgoInfo[];
  sampling_modes: string[];
}

export type JobState = "pending" | "running" | "succeeded" | "failed" | "cancelled";

export interface JobInfo {
  job_id: string;
  state: JobState;
  created: number;
  started: number | null;
  ended: number | null;
  error: string | null;
  config: RunConfigBody;
  artifacts: string[];
  result: Record<string, unknown> | null;
}

export interface MetricRow {
  seq: number;
  env_step: number;
  episode: number;
  kind: "episode" | "update";
  returns: number[] | null;
  losses: Array<Record<string, number> | null>;
  job_id: string | null;
  wall_clock: number;
}

export interface SeatBody {
  seat: number;
  agents: string[];
  sampling?: string;
}

export interface RunConfigBody {
  mode: string;
  env_id: string;
  master_seed: number;
  total_timesteps: number;
  ego: { agent: string };
  seats: SeatBody[];
}

export interface FieldError {
  field: string;
  message: string;
}
