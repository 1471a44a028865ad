/** End-to-end against the real simulator: spawns `serve` with a live
 * scenario and exercises the exact flows the console implements.
 *
 * The scenario keeps the base load (200 W) under the 500 W limit, so any
 * extra-unit consumption observed later is attributable to the load
 * override posted through the API.
 */

import { ChildProcess, spawn } from "node:child_process";
import { mkdtempSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ApiClient, ApiError } from "../src/api.js";

const SCENARIO = {
  duration_s: 21600,
  seed: 2,
  channel: { latency_s: 0, drop_probability: 0.0 },
  tariff: { normal_rate: "3.00", peak_rate: "5.00", fixed_charge: "0.00" },
  meters: [
    {
      meter_id: "12345",
      dest_number: "9194545400",
      load_limit_w: 500,
      profile: [{ start_s: 0, power_w: 200 }],
    },
  ],
};

function cents(money: string): number {
  const m = /^([0-9]+)\.([0-9]{2})$/.exec(money);
  if (!m) throw new Error(`not a money string: ${money}`);
  return Number(m[1]) * 100 + Number(m[2]);
}

async function waitFor<T>(
  probe: () => Promise<T | null>,
  what: string,
  timeoutMs = 60_000,
): Promise<T> {
  const deadline = Date.now() + timeoutMs;
  for (;;) {
    const value = await probe();
    if (value !== null) return value;
    if (Date.now() > deadline) throw new Error(`timed out waiting for ${what}`);
    await new Promise((resolve) => setTimeout(resolve, 250));
  }
}

let server: ChildProcess;
let api: ApiClient;

beforeAll(async () => {
  const dir = mkdtempSync(join(tmpdir(), "console-e2e-"));
  const scenarioPath = join(dir, "live.json");
  writeFileSync(scenarioPath, JSON.stringify(SCENARIO));
  server = spawn(
    "python3",
    ["-m", "wemsim.cli", "serve", scenarioPath,
     "--port", "0", "--scale", "1200", "--data-dir", join(dir, "state")],
    { stdio: ["ignore", "pipe", "pipe"] },
  );
  const url = await new Promise<string>((resolve, reject) => {
    let buffer = "";
    const timer = setTimeout(() => reject(new Error(`no banner; stderr: ${errors}`)), 30_000);
    let errors = "";
    server.stderr!.on("data", (chunk: Buffer) => {
      errors += chunk.toString();
    });
    server.stdout!.on("data", (chunk: Buffer) => {
      buffer += chunk.toString();
      const match = /serving on (http:\/\/[^\s]+)/.exec(buffer);
      if (match) {
        clearTimeout(timer);
        resolve(match[1]);
      }
    });
    server.on("exit", (code) => reject(new Error(`server exited early (${code}): ${errors}`)));
  });
  api = new ApiClient(url);
}, 45_000);

afterAll(() => {
  server?.kill();
});

describe("operator console against a live simulator", () => {
  it("reports a live head end", async () => {
    const health = await api.healthz();
    expect(health.status).toBe("ok");
    expect(health.live).toBe(true);
    expect(health.meters).toBe(1);
  });

  it("serves a 2x16 LCD snapshot for the scenario meter", async () => {
    const panel = await api.panel("12345");
    expect(panel.lcd).toHaveLength(2);
    for (const row of panel.lcd) expect(row).toHaveLength(16);
    expect(panel.lcd[0].startsWith("ID:12345")).toBe(true);
    expect(panel.config.load_limit_w).toBe(500);
  });

  it("rejects unknown meters with the invalid-entry error the banner keys on", async () => {
    const err = await api
      .bill("99999999", true)
      .then(() => null)
      .catch((e: unknown) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect((err as ApiError).invalidEntry).toBe(true);
    const panelErr = await api
      .panel("99999999")
      .then(() => null)
      .catch((e: unknown) => e);
    expect((panelErr as ApiError).invalidEntry).toBe(true);
  });

  it("walks the keypad password flow into the menu", async () => {
    await api.sendKeys("12345", ["#"]);
    await waitFor(async () => {
      const panel = await api.panel("12345");
      return panel.mode === "PASSWORD_ENTRY" ? panel : null;
    }, "password prompt");
    await api.sendKeys("12345", ["1", "2", "3", "4", "ENTER"]);
    const panel = await waitFor(async () => {
      const p = await api.panel("12345");
      return p.mode === "MENU" ? p : null;
    }, "menu mode");
    expect(panel.lcd[0].startsWith("MENU")).toBe(true);
    // leave the meter back in RUN for the rest of the test
    await api.sendKeys("12345", ["DOWN", "DOWN", "DOWN", "ENTER"]);
    await waitFor(async () => {
      const p = await api.panel("12345");
      return p.mode === "RUN" ? p : null;
    }, "run mode");
  }, 60_000);

  it("accumulates extra units only after the load override exceeds the limit", async () => {
    const before = await api.panel("12345");
    expect(before.register.ecu_pulses).toBe(0); // 200 W never crosses the 500 W limit
    await api.setLoad("12345", 900);
    const after = await waitFor(async () => {
      const p = await api.panel("12345");
      return p.register.ecu_pulses > 0 ? p : null;
    }, "extra units from the 900 W override");
    expect(after.register.ecu_pulses).toBeGreaterThan(0);
    expect(after.load_w).toBe(900);
  }, 90_000);

  it("bills with and without extra differ by exactly peak rate x extra units", async () => {
    const reading = await waitFor(async () => {
      const rows = await api.readings("12345");
      const hit = rows.find((r) => r.ecu_units !== "00.00");
      return hit ?? null;
    }, "a stored reading with extra units", 90_000);
    expect(cents(reading.ecu_units)).toBeGreaterThan(0);

    const withExtra = await api.bill("12345", true);
    const withoutExtra = await api.bill("12345", false);
    expect(withExtra.amount_without_extra).toBe(withoutExtra.amount_without_extra);
    expect(withExtra.amount_total).toBe(withoutExtra.amount_total);
    expect(cents(withExtra.amount_due)).toBe(cents(withExtra.amount_total));
    expect(cents(withoutExtra.amount_due)).toBe(cents(withoutExtra.amount_without_extra));

    // exact tariff law: the toggle's difference is the peak-rate charge on ECU
    const peak = cents(withExtra.tariff.peak_rate);
    const ecu = cents(withExtra.ecu_consumed);
    const expectedDelta = Math.floor((peak * ecu + 50) / 100);
    expect(cents(withExtra.amount_total) - cents(withExtra.amount_without_extra)).toBe(
      expectedDelta,
    );
  }, 120_000);
});
