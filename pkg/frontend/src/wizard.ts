import { ApiValidationError } from "./api.js";
import type { Catalog, EnvInfo, FieldError, RunConfigBody, SeatBody } from "./types.js";

export type Stage = "environment" | "agents" | "review";

const STAGES: Stage[] = ["environment", "agents", "review"];
const SAVED_KEY = "pnrl.saved_configs";

export interface SeatChoice {
  kind: "" | "learn" | "static";
  algo: string;
  path: string;
  overrides: string;
  sampling: string;
}

export interface WizardState {
  stage: Stage;
  envId: string | null;
  seed: string;
  timesteps: string;
  seats: SeatChoice[];
  messages: Record<string, string>;
}

function emptySeat(sampling: string): SeatChoice {
  return { kind: "", algo: "", path: "", overrides: "", sampling };
}

function specString(seat: SeatChoice): string {
  if (seat.kind === "static") return `static:${seat.path.trim()}`;
  const overrides = seat.overrides.trim();
  return overrides ? `learn:${seat.algo}:${overrides}` : `learn:${seat.algo}`;
}

function parseSpec(raw: string, sampling: string): SeatChoice {
  const seat = emptySeat(sampling);
  const parts = raw.split(":");
  if (parts[0] === "static") {
    seat.kind = "static";
    seat.path = parts.slice(1).join(":");
  } else if (parts[0] === "learn") {
    seat.kind = "learn";
    seat.algo = parts[1] ?? "";
    seat.overrides = parts.slice(2).join(":");
  }
  return seat;
}

/** Field key a validation message for the given seat index anchors to. */
export function seatField(index: number): string {
  return index === 0 ? "ego.agent" : `seats[${index - 1}].agents[0]`;
}

function loadSavedMap(): Record<string, RunConfigBody> {
  try {
    return JSON.parse(window.localStorage.getItem(SAVED_KEY) ?? "{}");
  } catch {
    return {};
  }
}

/**
 * Three-stage experiment builder: environment, then one agent per seat,
 * then review and submit.  All dropdown contents come from the service
 * catalog; nothing about environments or algorithms is hardcoded here.
 */
export class Wizard {
  state: WizardState;

  constructor(
    private root: HTMLElement,
    private catalog: Catalog,
    private onSubmit: (config: RunConfigBody) => Promise<void>,
  ) {
    this.state = {
      stage: "environment",
      envId: null,
      seed: "0",
      timesteps: "10000",
      seats: [],
      messages: {},
    };
  }

  private env(): EnvInfo | null {
    return this.catalog.envs.find((e) => e.env_id === this.state.envId) ?? null;
  }

  private defaultSampling(): string {
    return this.catalog.sampling_modes[0] ?? "round_robin";
  }

  canEnter(stage: Stage): boolean {
    // agents and review both hinge on the environment; review stays
    // reachable with incomplete seats so its disabled submit explains why
    return stage === "environment" || this.state.envId !== null;
  }

  goTo(stage: Stage): boolean {
    if (!this.canEnter(stage)) {
      this.state.messages["stage"] = "choose an environment first";
      this.render();
      return false;
    }
    delete this.state.messages["stage"];
    this.state.stage = stage;
    this.render();
    return true;
  }

  selectEnv(envId: string | null): void {
    this.state.envId = envId;
    const env = this.env();
    const n = env ? env.n_agents : 0;
    this.state.seats = Array.from({ length: n }, () => emptySeat(this.defaultSampling()));
    this.state.messages = {};
    this.render();
  }

  agentsComplete(): boolean {
    if (this.state.seats.length === 0) return false;
    return this.state.seats.every(
      (s) => (s.kind === "learn" && s.algo !== "") || (s.kind === "static" && s.path.trim() !== ""),
    );
  }

  /** Client-side validation; fills messages and returns overall validity. */
  validate(): boolean {
    const msgs: Record<string, string> = {};
    if (this.state.envId === null) msgs["env_id"] = "an environment is required";
    const seed = Number(this.state.seed);
    if (!Number.isInteger(seed) || seed < 0) msgs["master_seed"] = "seed must be a non-negative integer";
    const steps = Number(this.state.timesteps);
    if (!Number.isInteger(steps) || steps < 1) msgs["total_timesteps"] = "timesteps must be a positive integer";
    this.state.seats.forEach((s, i) => {
      if (s.kind === "") msgs[seatField(i)] = `seat ${i} needs an agent`;
      else if (s.kind === "learn" && s.algo === "") msgs[seatField(i)] = `seat ${i} needs an algorithm`;
      else if (s.kind === "static" && s.path.trim() === "") msgs[seatField(i)] = `seat ${i} needs a policy file path`;
    });
    this.state.messages = msgs;
    return Object.keys(msgs).length === 0;
  }

  buildConfig(): RunConfigBody {
    const seats: SeatBody[] = this.state.seats.slice(1).map((s, k) => ({
      seat: k + 1,
      agents: [specString(s)],
      sampling: s.sampling,
    }));
    return {
      mode: "train",
      env_id: this.state.envId ?? "",
      master_seed: Number(this.state.seed),
      total_timesteps: Number(this.state.timesteps),
      ego: { agent: specString(this.state.seats[0]) },
      seats,
    };
  }

  /** Map server 422 diagnostics onto the fields they name. */
  applyServerErrors(errors: FieldError[]): void {
    for (const e of errors) {
      const key = e.field in this.state.messages || this.knownField(e.field) ? e.field : "global";
      const prior = this.state.messages[key];
      this.state.messages[key] = prior ? `${prior}; ${e.message}` : e.message;
    }
    this.render();
  }

  private knownField(field: string): boolean {
    if (["env_id", "master_seed", "total_timesteps", "mode"].includes(field)) return true;
    return this.state.seats.some((_, i) => seatField(i) === field);
  }

  async submit(): Promise<void> {
    if (!this.validate()) {
      this.render();
      return;
    }
    try {
      await this.onSubmit(this.buildConfig());
      this.state.messages = { global: "job submitted" };
    } catch (err) {
      if (err instanceof ApiValidationError) {
        this.applyServerErrors(err.errors);
        return;
      }
      this.state.messages = { global: `submit failed: ${(err as Error).message}` };
    }
    this.render();
  }

  saveCurrent(name: string): void {
    if (!this.validate() || name.trim() === "") {
      this.render();
      return;
    }
    const saved = loadSavedMap();
    saved[name.trim()] = this.buildConfig();
    window.localStorage.setItem(SAVED_KEY, JSON.stringify(saved));
    this.render();
  }

  savedNames(): string[] {
    return Object.keys(loadSavedMap()).sort();
  }

  loadSaved(name: string): boolean {
    const config = loadSavedMap()[name];
    if (!config) return false;
    this.state.envId = config.env_id;
    this.state.seed = String(config.master_seed);
    this.state.timesteps = String(config.total_timesteps);
    const env = this.env();
    const n = env ? env.n_agents : 1 + config.seats.length;
    const seats = [parseSpec(config.ego.agent, this.defaultSampling())];
    for (const seatBody of config.seats) {
      seats.push(parseSpec(seatBody.agents[0] ?? "", seatBody.sampling ?? this.defaultSampling()));
    }
    while (seats.length < n) seats.push(emptySeat(this.defaultSampling()));
    this.state.seats = seats.slice(0, Math.max(n, seats.length));
    this.state.messages = {};
    this.state.stage = "review";
    this.render();
    return true;
  }

  // -- rendering ------------------------------------------------------------

  render(): void {
    this.root.innerHTML = "";
    this.root.appendChild(this.renderNav());
    const stageMsg = this.state.messages["stage"];
    if (stageMsg) this.root.appendChild(this.message("stage", stageMsg));
    if (this.state.stage === "environment") this.root.appendChild(this.renderEnvironment());
    else if (this.state.stage === "agents") this.root.appendChild(this.renderAgents());
    else this.root.appendChild(this.renderReview());
  }

  private renderNav(): HTMLElement {
    const nav = document.createElement("nav");
    nav.className = "wizard-nav";
    for (const stage of STAGES) {
      const btn = document.createElement("button");
      btn.type = "button";
      btn.dataset.nav = stage;
      btn.textContent = stage;
      btn.disabled = !this.canEnter(stage);
      if (stage === this.state.stage) btn.classList.add("active");
      btn.addEventListener("click", () => this.goTo(stage));
      nav.appendChild(btn);
    }
    return nav;
  }

  private message(field: string, text: string): HTMLElement {
    const p = document.createElement("p");
    p.className = "field-msg";
    p.dataset.for = field;
    p.textContent = text;
    return p;
  }

  private maybeMessage(section: HTMLElement, field: string): void {
    const text = this.state.messages[field];
    if (text) section.appendChild(this.message(field, text));
  }

  private renderEnvironment(): HTMLElement {
    const section = document.createElement("section");
    section.dataset.stage = "environment";

    const label = document.createElement("label");
    label.textContent = "Environment ";
    const select = document.createElement("select");
    select.id = "env-select";
    const blank = document.createElement("option");
    blank.value = "";
    blank.textContent = "choose...";
    select.appendChild(blank);
    for (const env of this.catalog.envs) {
      const opt = document.createElement("option");
      opt.value = env.env_id;
      opt.textContent = `${env.env_id} (${env.n_agents} agents, horizon ${env.horizon})`;
      select.appendChild(opt);
    }
    select.value = this.state.envId ?? "";
    select.addEventListener("change", () => this.selectEnv(select.value === "" ? null : select.value));
    label.appendChild(select);
    section.appendChild(label);
    this.maybeMessage(section, "env_id");

    section.appendChild(this.numberInput("seed-input", "Master seed", this.state.seed, (v) => (this.state.seed = v)));
    this.maybeMessage(section, "master_seed");
    section.appendChild(
      this.numberInput("timesteps-input", "Total timesteps", this.state.timesteps, (v) => (this.state.timesteps = v)),
    );
    this.maybeMessage(section, "total_timesteps");

    const env = this.env();
    if (env) {
      const info = document.createElement("p");
      info.className = "env-info";
      const best = env.optimal_return === null ? "unknown" : env.optimal_return.join(", ");
      info.textContent = `${env.reward_structure} rewards, optimal return: ${best}`;
      section.appendChild(info);
    }
    return section;
  }

  private numberInput(id: string, text: string, value: string, sink: (v: string) => void): HTMLElement {
    const label = document.createElement("label");
    label.textContent = `${text} `;
    const input = document.createElement("input");
    input.id = id;
    input.type = "number";
    input.value = value;
    input.addEventListener("change", () => sink(input.value));
    label.appendChild(input);
    return label;
  }

  private renderAgents(): HTMLElement {
    const section = document.createElement("section");
    section.dataset.stage = "agents";
    this.state.seats.forEach((seat, i) => section.appendChild(this.renderSeat(seat, i)));
    return section;
  }

  private renderSeat(seat: SeatChoice, index: number): HTMLElement {
    const box = document.createElement("fieldset");
    box.dataset.seat = String(index);
    const legend = document.createElement("legend");
    legend.textContent = index === 0 ? "seat 0 (ego)" : `seat ${index} (partner)`;
    box.appendChild(legend);

    const select = document.createElement("select");
    select.className = "agent-select";
    const blank = document.createElement("option");
    blank.value = "";
    blank.textContent = "choose agent...";
    select.appendChild(blank);
    for (const algo of this.catalog.algorithms) {
      const opt = document.createElement("option");
      opt.value = `learn:${algo.algo}`;
      opt.textContent = `learn ${algo.algo}${algo.uses_critic ? " (critic)" : ""}`;
      select.appendChild(opt);
    }
    const staticOpt = document.createElement("option");
    staticOpt.value = "static";
    staticOpt.textContent = "static policy file";
    select.appendChild(staticOpt);
    select.value = seat.kind === "static" ? "static" : seat.kind === "learn" ? `learn:${seat.algo}` : "";
    select.addEventListener("change", () => {
      if (select.value === "") {
        seat.kind = "";
        seat.algo = "";
      } else if (select.value === "static") {
        seat.kind = "static";
      } else {
        seat.kind = "learn";
        seat.algo = select.value.split(":")[1];
      }
      this.render();
    });
    box.appendChild(select);

    if (seat.kind === "static") {
      const path = document.createElement("input");
      path.type = "text";
      path.className = "static-path";
      path.placeholder = "path/to/policy.pnrlpol";
      path.value = seat.path;
      path.addEventListener("change", () => {
        seat.path = path.value;
      });
      box.appendChild(path);
    }
    if (seat.kind === "learn") {
      const overrides = document.createElement("input");
      overrides.type = "text";
      overrides.className = "overrides";
      overrides.placeholder = "lr=0.003,gamma=0.99";
      overrides.value = seat.overrides;
      overrides.addEventListener("change", () => {
        seat.overrides = overrides.value;
      });
      box.appendChild(overrides);
    }
    if (index > 0) {
      const sampling = document.createElement("select");
      sampling.className = "sampling-select";
      for (const mode of this.catalog.sampling_modes) {
        const opt = document.createElement("option");
        opt.value = mode;
        opt.textContent = mode;
        sampling.appendChild(opt);
      }
      sampling.value = seat.sampling;
      sampling.addEventListener("change", () => {
        seat.sampling = sampling.value;
      });
      box.appendChild(sampling);
    }
    this.maybeMessage(box, seatField(index));
    return box;
  }

  private renderReview(): HTMLElement {
    const section = document.createElement("section");
    section.dataset.stage = "review";

    const preview = document.createElement("pre");
    preview.id = "config-preview";
    preview.textContent = JSON.stringify(this.buildConfig(), null, 2);
    section.appendChild(preview);

    const submit = document.createElement("button");
    submit.type = "button";
    submit.id = "submit-btn";
    submit.textContent = "Submit job";
    submit.disabled = !this.agentsComplete();
    submit.addEventListener("click", () => void this.submit());
    section.appendChild(submit);
    if (!this.agentsComplete()) {
      section.appendChild(this.message("submit", "every seat needs an agent before submitting"));
    }

    const saveName = document.createElement("input");
    saveName.type = "text";
    saveName.id = "save-name";
    saveName.placeholder = "config name";
    section.appendChild(saveName);

    const saveBtn = document.createElement("button");
    saveBtn.type = "button";
    saveBtn.id = "save-btn";
    saveBtn.textContent = "Save";
    saveBtn.addEventListener("click", () => this.saveCurrent(saveName.value));
    section.appendChild(saveBtn);

    const names = this.savedNames();
    if (names.length > 0) {
      const loadSelect = document.createElement("select");
      loadSelect.id = "load-select";
      for (const name of names) {
        const opt = document.createElement("option");
        opt.value = name;
        opt.textContent = name;
        loadSelect.appendChild(opt);
      }
      section.appendChild(loadSelect);
      const loadBtn = document.createElement("button");
      loadBtn.type = "button";
      loadBtn.id = "load-btn";
      loadBtn.textContent = "Load";
      loadBtn.addEventListener("click", () => this.loadSaved(loadSelect.value));
      section.appendChild(loadBtn);
    }

    for (const field of ["global", "env_id", "master_seed", "total_timesteps", "mode"]) {
      this.maybeMessage(section, field);
    }
    this.state.seats.forEach((_, i) => this.maybeMessage(section, seatField(i)));
    return section;
  }
}
