import { ApiClient } from "./api.js";
import { Dashboard } from "./dashboard.js";
import { Wizard } from "./wizard.js";

/** Wire the wizard and dashboard into the static page and start polling. */
export async function boot(): Promise<void> {
  const api = new ApiClient();
  const wizardRoot = document.getElementById("wizard");
  const dashRoot = document.getElementById("dashboard");
  if (!wizardRoot || !dashRoot) throw new Error("missing #wizard or #dashboard container");

  const catalog = await api.catalog();
  const dashboard = new Dashboard(dashRoot, api);
  const wizard = new Wizard(wizardRoot, catalog, async (config) => {
    const job = await api.createJob(config);
    dashboard.prime(job);
  });
  wizard.render();
  dashboard.start();
}
