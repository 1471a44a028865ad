/** Live meter faceplate: LCD mirror, keypad, and load slider.
 *
 * The panel polls the simulator snapshot endpoint (1 Hz by default) and
 * renders whatever the firmware last drew; key presses and load changes are
 * posted back, so the browser holds no meter state of its own.  If the
 * server becomes unreachable the controls grey out and a reconnect button
 * appears.
 */

import { ApiClient, MeterKey, Panel } from "./api.js";

export const KEYPAD_LAYOUT: MeterKey[] = [
  "1", "2", "3",
  "4", "5", "6",
  "7", "8", "9",
  "*", "0", "#",
  "UP", "DOWN", "ENTER",
];

export interface MeterPanelOptions {
  pollIntervalMs?: number;
  maxLoadW?: number;
}

export class MeterPanel {
  private readonly api: ApiClient;
  private readonly pollIntervalMs: number;
  private timer: ReturnType<typeof setInterval> | null = null;
  private meterId = "";

  private readonly root: HTMLElement;
  private readonly idInput: HTMLInputElement;
  private readonly attachButton: HTMLButtonElement;
  private readonly reconnectButton: HTMLButtonElement;
  private readonly statusLine: HTMLElement;
  private readonly lcd: HTMLPreElement;
  private readonly modeLine: HTMLElement;
  private readonly registerLine: HTMLElement;
  private readonly keypad: HTMLElement;
  private readonly slider: HTMLInputElement;
  private readonly loadReadout: HTMLElement;

  constructor(container: HTMLElement, api: ApiClient, options: MeterPanelOptions = {}) {
    this.api = api;
    this.pollIntervalMs = options.pollIntervalMs ?? 1000;
    const doc = container.ownerDocument;

    this.root = doc.createElement("section");
    this.root.className = "meter-panel";

    const form = doc.createElement("div");
    form.className = "attach-form";
    this.idInput = doc.createElement("input");
    this.idInput.placeholder = "meter id";
    this.idInput.className = "meter-id-input";
    this.attachButton = doc.createElement("button");
    this.attachButton.textContent = "Attach";
    this.attachButton.addEventListener("click", () => {
      void this.attach(this.idInput.value.trim());
    });
    form.append(this.idInput, this.attachButton);

    this.statusLine = doc.createElement("div");
    this.statusLine.className = "status-line";

    this.reconnectButton = doc.createElement("button");
    this.reconnectButton.textContent = "Reconnect";
    this.reconnectButton.className = "reconnect";
    this.reconnectButton.hidden = true;
    this.reconnectButton.addEventListener("click", () => {
      void this.attach(this.meterId);
    });

    this.lcd = doc.createElement("pre");
    this.lcd.className = "lcd";
    this.lcd.textContent = blankLcd();

    this.modeLine = doc.createElement("div");
    this.modeLine.className = "mode-line";
    this.registerLine = doc.createElement("div");
    this.registerLine.className = "register-line";

    this.keypad = doc.createElement("div");
    this.keypad.className = "keypad";
    for (const key of KEYPAD_LAYOUT) {
      const button = doc.createElement("button");
      button.textContent = key;
      button.dataset.key = key;
      button.addEventListener("click", () => {
        void this.press(key);
      });
      this.keypad.append(button);
    }

    const loadRow = doc.createElement("div");
    loadRow.className = "load-row";
    this.slider = doc.createElement("input");
    this.slider.type = "range";
    this.slider.min = "0";
    this.slider.max = String(options.maxLoadW ?? 2000);
    this.slider.step = "10";
    this.slider.className = "load-slider";
    this.loadReadout = doc.createElement("span");
    this.loadReadout.className = "load-readout";
    this.slider.addEventListener("input", () => {
      this.loadReadout.textContent = `${this.slider.value} W`;
    });
    this.slider.addEventListener("change", () => {
      void this.applyLoad(Number(this.slider.value));
    });
    loadRow.append(this.slider, this.loadReadout);

    this.root.append(
      form,
      this.statusLine,
      this.reconnectButton,
      this.lcd,
      this.modeLine,
      this.registerLine,
      this.keypad,
      loadRow,
    );
    container.append(this.root);
    this.setConnected(false);
  }

  /** Start mirroring a meter; polls immediately and then on the interval. */
  async attach(meterId: string): Promise<void> {
    if (!meterId) {
      this.statusLine.textContent = "enter a meter id";
      return;
    }
    this.meterId = meterId;
    this.idInput.value = meterId;
    this.stopPolling();
    await this.poll();
    if (this.timer === null && !this.reconnectButton.hidden) {
      return; // first poll already failed; stay disconnected
    }
    this.timer = setInterval(() => {
      void this.poll();
    }, this.pollIntervalMs);
  }

  detach(): void {
    this.stopPolling();
    this.meterId = "";
    this.setConnected(false);
    this.lcd.textContent = blankLcd();
  }

  get attachedMeterId(): string {
    return this.meterId;
  }

  get connected(): boolean {
    return !this.root.classList.contains("disconnected");
  }

  private stopPolling(): void {
    if (this.timer !== null) {
      clearInterval(this.timer);
      this.timer = null;
    }
  }

  private async poll(): Promise<void> {
    if (!this.meterId) {
      return;
    }
    try {
      const panel = await this.api.panel(this.meterId);
      this.render(panel);
      this.setConnected(true);
    } catch (err) {
      this.stopPolling();
      this.setConnected(false);
      this.statusLine.textContent = `meter unreachable: ${describe(err)}`;
    }
  }

  private render(panel: Panel): void {
    this.lcd.textContent = panel.lcd.join("\n");
    this.modeLine.textContent = `mode ${panel.mode} · sim ${panel.clock} (t=${panel.time_s}s)`;
    this.registerLine.textContent =
      `TOT ${panel.register.total_units} · EX ${panel.register.ecu_units} · ` +
      `limit ${panel.config.load_limit_w} W · sent ${panel.telegrams_sent}`;
    this.statusLine.textContent = `meter ${panel.meter_id} → ${panel.config.dest_number}`;
    const active = this.root.ownerDocument.activeElement;
    if (active !== this.slider) {
      this.slider.value = String(panel.load_w);
      this.loadReadout.textContent = `${panel.load_w} W`;
    }
  }

  private setConnected(connected: boolean): void {
    this.root.classList.toggle("disconnected", !connected);
    this.reconnectButton.hidden = connected || this.meterId === "";
    for (const button of this.keypad.querySelectorAll("button")) {
      button.disabled = !connected;
    }
    this.slider.disabled = !connected;
  }

  private async press(key: MeterKey): Promise<void> {
    if (!this.meterId || !this.connected) {
      return;
    }
    try {
      await this.api.sendKeys(this.meterId, [key]);
    } catch (err) {
      this.setConnected(false);
      this.statusLine.textContent = `key rejected: ${describe(err)}`;
    }
  }

  private async applyLoad(powerW: number): Promise<void> {
    if (!this.meterId || !this.connected) {
      return;
    }
    try {
      await this.api.setLoad(this.meterId, powerW);
    } catch (err) {
      this.setConnected(false);
      this.statusLine.textContent = `load rejected: ${describe(err)}`;
    }
  }
}

function blankLcd(): string {
  return `${" ".repeat(16)}\n${" ".repeat(16)}`;
}

function describe(err: unknown): string {
  return err instanceof Error ? err.message : String(err);
}
