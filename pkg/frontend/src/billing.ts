/** Billing lookup: meter-id form, reading history, and the bill panel.
 *
 * Looking up a meter fetches its stored readings and a computed bill; the
 * with/without-extra toggle re-queries the bill with `with_extra=false`
 * rather than recomputing anything locally.  An unknown id raises the
 * invalid-entry banner; any other API failure is surfaced verbatim.
 */

import { ApiClient, ApiError, Bill, Reading } from "./api.js";

export class BillingConsole {
  private readonly api: ApiClient;
  private meterId = "";

  private readonly root: HTMLElement;
  private readonly idInput: HTMLInputElement;
  private readonly lookupButton: HTMLButtonElement;
  private readonly extraToggle: HTMLInputElement;
  private readonly banner: HTMLElement;
  private readonly readingsBody: HTMLTableSectionElement;
  private readonly billPanel: HTMLElement;

  constructor(container: HTMLElement, api: ApiClient) {
    this.api = api;
    const doc = container.ownerDocument;

    this.root = doc.createElement("section");
    this.root.className = "billing-console";

    const form = doc.createElement("div");
    form.className = "lookup-form";
    this.idInput = doc.createElement("input");
    this.idInput.placeholder = "meter id";
    this.idInput.className = "meter-id-input";
    this.lookupButton = doc.createElement("button");
    this.lookupButton.textContent = "Look up";
    this.lookupButton.addEventListener("click", () => {
      void this.lookup(this.idInput.value.trim());
    });

    const toggleLabel = doc.createElement("label");
    this.extraToggle = doc.createElement("input");
    this.extraToggle.type = "checkbox";
    this.extraToggle.checked = true;
    this.extraToggle.className = "extra-toggle";
    this.extraToggle.addEventListener("change", () => {
      if (this.meterId) {
        void this.refreshBill();
      }
    });
    toggleLabel.append(this.extraToggle, doc.createTextNode(" include extra units"));
    form.append(this.idInput, this.lookupButton, toggleLabel);

    this.banner = doc.createElement("div");
    this.banner.className = "error-banner";
    this.banner.hidden = true;

    const table = doc.createElement("table");
    table.className = "readings-table";
    const head = doc.createElement("thead");
    const headRow = doc.createElement("tr");
    for (const title of ["received (s)", "units", "extra units"]) {
      const th = doc.createElement("th");
      th.textContent = title;
      headRow.append(th);
    }
    head.append(headRow);
    this.readingsBody = doc.createElement("tbody");
    table.append(head, this.readingsBody);

    this.billPanel = doc.createElement("dl");
    this.billPanel.className = "bill-panel";

    this.root.append(form, this.banner, table, this.billPanel);
    container.append(this.root);
  }

  get withExtra(): boolean {
    return this.extraToggle.checked;
  }

  /** Fetch readings and bill for a meter; drives the whole view. */
  async lookup(meterId: string): Promise<void> {
    this.hideBanner();
    if (!meterId) {
      this.showBanner("enter a meter id");
      return;
    }
    this.meterId = meterId;
    let readings: Reading[];
    try {
      readings = await this.api.readings(meterId);
    } catch (err) {
      this.clearResults();
      this.showError(err);
      return;
    }
    this.renderReadings(readings);
    await this.refreshBill();
  }

  private async refreshBill(): Promise<void> {
    this.hideBanner();
    let bill: Bill;
    try {
      bill = await this.api.bill(this.meterId, this.withExtra);
    } catch (err) {
      this.billPanel.replaceChildren();
      this.showError(err);
      return;
    }
    this.renderBill(bill);
  }

  private renderReadings(readings: Reading[]): void {
    const doc = this.root.ownerDocument;
    this.readingsBody.replaceChildren();
    for (const reading of readings) {
      const row = doc.createElement("tr");
      for (const value of [String(reading.received_at_s), reading.ncu_units, reading.ecu_units]) {
        const cell = doc.createElement("td");
        cell.textContent = value;
        row.append(cell);
      }
      this.readingsBody.append(row);
    }
  }

  private renderBill(bill: Bill): void {
    const doc = this.root.ownerDocument;
    this.billPanel.replaceChildren();
    const rows: Array<[string, string]> = [
      ["meter", bill.meter_id],
      ["period", `${bill.period_start_s}s – ${bill.period_end_s}s`],
      ["units consumed", bill.ncu_consumed],
      ["extra units consumed", bill.ecu_consumed],
      ["fixed charge", bill.tariff.fixed_charge],
      ["amount without extra", bill.amount_without_extra],
      ["amount with extra", bill.amount_total],
      [bill.with_extra ? "amount due (with extra)" : "amount due (without extra)", bill.amount_due],
    ];
    for (const [term, value] of rows) {
      const dt = doc.createElement("dt");
      dt.textContent = term;
      const dd = doc.createElement("dd");
      dd.textContent = value;
      if (term.startsWith("amount due")) {
        dd.className = "amount-due";
      }
      this.billPanel.append(dt, dd);
    }
  }

  private clearResults(): void {
    this.readingsBody.replaceChildren();
    this.billPanel.replaceChildren();
  }

  private showError(err: unknown): void {
    if (err instanceof ApiError && err.invalidEntry) {
      this.showBanner("Invalid Entry");
    } else if (err instanceof ApiError) {
      this.showBanner(`${err.status}: ${err.message}`);
    } else {
      this.showBanner(err instanceof Error ? err.message : String(err));
    }
  }

  private showBanner(text: string): void {
    this.banner.textContent = text;
    this.banner.hidden = false;
  }

  private hideBanner(): void {
    this.banner.hidden = true;
    this.banner.textContent = "";
  }
}
