/** Page bootstrap: wires the meter panel and billing console to one API base. */

import { ApiClient } from "./api.js";
import { BillingConsole } from "./billing.js";
import { MeterPanel } from "./meterPanel.js";

const DEFAULT_BASE = "http://127.0.0.1:8000";

function start(): void {
  const baseInput = document.querySelector<HTMLInputElement>("#api-base");
  const connectButton = document.querySelector<HTMLButtonElement>("#api-connect");
  const healthLine = document.querySelector<HTMLElement>("#api-health");
  const panelHost = document.querySelector<HTMLElement>("#meter-panel");
  const billingHost = document.querySelector<HTMLElement>("#billing-console");
  if (!baseInput || !connectButton || !healthLine || !panelHost || !billingHost) {
    throw new Error("console shell markup is incomplete");
  }
  baseInput.value = DEFAULT_BASE;

  let panel: MeterPanel | null = null;

  const connect = async (): Promise<void> => {
    const api = new ApiClient(baseInput.value.trim() || DEFAULT_BASE);
    panelHost.replaceChildren();
    billingHost.replaceChildren();
    panel?.detach();
    panel = new MeterPanel(panelHost, api);
    new BillingConsole(billingHost, api);
    try {
      const health = await api.healthz();
      healthLine.textContent = health.live
        ? `connected · live simulation at t=${health.time_s}s · ${health.meters} meter(s)`
        : `connected · head end only (no live simulation) · ${health.meters} meter(s)`;
    } catch (err) {
      healthLine.textContent = `cannot reach API: ${err instanceof Error ? err.message : err}`;
    }
  };

  connectButton.addEventListener("click", () => {
    void connect();
  });
  void connect();
}

start();
