// @vitest-environment jsdom
import { beforeEach, describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { BillingConsole } from "../src/billing.js";
import { CannedRoute, FakeFetch } from "./helpers.js";

const READINGS = {
  meter_id: "12345",
  readings: [
    { meter_id: "12345", received_at_s: 60, ncu_units: "00.01", ecu_units: "00.00", raw: "#$12345$00.01$00.00$*" },
    { meter_id: "12345", received_at_s: 3660, ncu_units: "00.93", ecu_units: "00.06", raw: "#$12345$00.93$00.06$*" },
  ],
};

function bill(withExtra: boolean) {
  return {
    meter_id: "12345",
    period_start_s: 0,
    period_end_s: 3660,
    start_reading_at_s: null,
    end_reading_at_s: 3660,
    ncu_consumed: "00.93",
    ecu_consumed: "00.06",
    amount_without_extra: "2.79",
    amount_total: "3.09",
    with_extra: withExtra,
    amount_due: withExtra ? "3.09" : "2.79",
    tariff: { normal_rate: "3.00", peak_rate: "5.00", fixed_charge: "0.00" },
  };
}

function routes(): CannedRoute[] {
  return [
    { match: "GET http://api/meters/12345/readings", body: READINGS },
    { match: "GET http://api/meters/12345/bill?with_extra=false", body: bill(false) },
    { match: "GET http://api/meters/12345/bill", body: bill(true) },
    { match: /\/meters\/[0-9]+\/(readings|bill)/, status: 404, body: { error: "invalid entry" } },
  ];
}

describe("BillingConsole", () => {
  let fake: FakeFetch;
  let view: BillingConsole;
  let host: HTMLElement;

  beforeEach(() => {
    document.body.innerHTML = "";
    host = document.createElement("div");
    document.body.append(host);
    fake = new FakeFetch(routes());
    view = new BillingConsole(host, new ApiClient("http://api", fake.fn));
  });

  function banner(): HTMLElement {
    return host.querySelector(".error-banner") as HTMLElement;
  }

  it("populates the reading table and bill panel on lookup", async () => {
    await view.lookup("12345");
    const rows = host.querySelectorAll("tbody tr");
    expect(rows).toHaveLength(2);
    expect(rows[1].textContent).toBe("366000.9300.06");
    expect(banner().hidden).toBe(true);
    const due = host.querySelector(".amount-due") as HTMLElement;
    expect(due.textContent).toBe("3.09");
    expect(host.querySelector(".bill-panel")?.textContent).toContain("amount due (with extra)");
  });

  it("shows the invalid-entry banner for an unknown id", async () => {
    await view.lookup("99999999");
    expect(banner().hidden).toBe(false);
    expect(banner().textContent).toBe("Invalid Entry");
    expect(host.querySelectorAll("tbody tr")).toHaveLength(0);
    expect(host.querySelector(".amount-due")).toBeNull();
  });

  it("clears the banner once a lookup succeeds again", async () => {
    await view.lookup("99999999");
    expect(banner().hidden).toBe(false);
    await view.lookup("12345");
    expect(banner().hidden).toBe(true);
  });

  it("re-queries with with_extra=false when the toggle is turned off", async () => {
    await view.lookup("12345");
    const toggle = host.querySelector(".extra-toggle") as HTMLInputElement;
    toggle.checked = false;
    toggle.dispatchEvent(new Event("change"));
    await new Promise((resolve) => setTimeout(resolve, 0)); // let the refetch settle
    const billCalls = fake.callsTo("/bill");
    expect(billCalls).toHaveLength(2);
    expect(billCalls[1].url).toContain("with_extra=false");
    const due = host.querySelector(".amount-due") as HTMLElement;
    expect(due.textContent).toBe("2.79");
    expect(host.querySelector(".bill-panel")?.textContent).toContain("amount due (without extra)");
  });

  it("renders amounts verbatim from the API (no local arithmetic)", async () => {
    // nonsense figures the UI could never derive on its own
    fake.routes.unshift({
      match: "GET http://api/meters/12345/bill",
      body: { ...bill(true), amount_due: "123.45", amount_total: "123.45" },
    });
    await view.lookup("12345");
    const due = host.querySelector(".amount-due") as HTMLElement;
    expect(due.textContent).toBe("123.45");
  });

  it("surfaces non-404 failures with their status and message", async () => {
    fake.routes.unshift({
      match: "GET http://api/meters/12345/readings",
      status: 422,
      body: { error: "no readings at or before the requested period end" },
    });
    await view.lookup("12345");
    expect(banner().hidden).toBe(false);
    expect(banner().textContent).toBe("422: no readings at or before the requested period end");
  });

  it("rejects an empty meter id without calling the API", async () => {
    await view.lookup("");
    expect(banner().hidden).toBe(false);
    expect(fake.calls).toHaveLength(0);
  });
});
