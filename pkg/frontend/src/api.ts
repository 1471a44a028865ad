/** Typed client for the simulator's HTTP API.
 *
 * Every method maps to one route; the console performs no arithmetic of its
 * own, so these response shapes are rendered as-is.
 */

export interface Health {
  status: string;
  live: boolean;
  time_s: number | null;
  meters: number;
}

export interface Meter {
  meter_id: string;
  dest_number: string;
}

export interface Reading {
  meter_id: string;
  received_at_s: number;
  ncu_units: string;
  ecu_units: string;
  raw: string;
}

export interface Tariff {
  normal_rate: string;
  peak_rate: string;
  fixed_charge: string;
}

export interface Bill {
  meter_id: string;
  period_start_s: number;
  period_end_s: number;
  start_reading_at_s: number | null;
  end_reading_at_s: number;
  ncu_consumed: string;
  ecu_consumed: string;
  amount_without_extra: string;
  amount_total: string;
  with_extra: boolean;
  amount_due: string;
  tariff: Tariff;
}

export interface PanelRegister {
  ncu_pulses: number;
  ecu_pulses: number;
  ncu_units: string;
  ecu_units: string;
  total_units: string;
}

export interface PanelConfig {
  dest_number: string;
  load_limit_w: number;
  window_unit: string;
  window_start: number;
  window_end: number;
}

export interface Panel {
  meter_id: string;
  time_s: number;
  clock: string;
  mode: string;
  lcd: string[];
  register: PanelRegister;
  config: PanelConfig;
  load_w: number;
  telegrams_sent: number;
}

export type MeterKey =
  | "0" | "1" | "2" | "3" | "4" | "5" | "6" | "7" | "8" | "9"
  | "*" | "#" | "UP" | "DOWN" | "ENTER";

/** An HTTP error response, keeping the server's JSON body. */
export class ApiError extends Error {
  readonly status: number;
  readonly body: Record<string, unknown>;

  constructor(status: number, body: Record<string, unknown>) {
    super(typeof body.error === "string" ? body.error : `HTTP ${status}`);
    this.name = "ApiError";
    this.status = status;
    this.body = body;
  }

  /** The server's invalid-entry rejection (unknown meter id). */
  get invalidEntry(): boolean {
    return this.status === 404 && this.message === "invalid entry";
  }
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export interface RangeQuery {
  from?: number;
  to?: number;
}

export class ApiClient {
  private readonly baseUrl: string;
  private readonly fetchFn: FetchLike;

  constructor(baseUrl: string, fetchFn?: FetchLike) {
    this.baseUrl = baseUrl.replace(/\/+$/, "");
    // bind so callers may hand us the bare global fetch
    this.fetchFn = fetchFn ?? ((input, init) => fetch(input, init));
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: RequestInit = { method, headers: { Accept: "application/json" } };
    if (body !== undefined) {
      init.headers = { ...init.headers, "Content-Type": "application/json" };
      init.body = JSON.stringify(body);
    }
    const response = await this.fetchFn(this.baseUrl + path, init);
    const text = await response.text();
    const parsed = text ? JSON.parse(text) : {};
    if (!response.ok) {
      throw new ApiError(response.status, parsed);
    }
    return parsed as T;
  }

  healthz(): Promise<Health> {
    return this.request("GET", "/healthz");
  }

  async listMeters(): Promise<Meter[]> {
    const data = await this.request<{ meters: Meter[] }>("GET", "/meters");
    return data.meters;
  }

  registerMeter(meterId: string, destNumber: string): Promise<Meter> {
    return this.request("POST", "/meters", { meter_id: meterId, dest_number: destNumber });
  }

  getMeter(meterId: string): Promise<Meter> {
    return this.request("GET", `/meters/${encodeURIComponent(meterId)}`);
  }

  async readings(meterId: string, range: RangeQuery = {}): Promise<Reading[]> {
    const query = buildQuery({ from: range.from, to: range.to });
    const data = await this.request<{ readings: Reading[] }>(
      "GET",
      `/meters/${encodeURIComponent(meterId)}/readings${query}`,
    );
    return data.readings;
  }

  bill(meterId: string, withExtra: boolean, range: RangeQuery = {}): Promise<Bill> {
    const query = buildQuery({
      from: range.from,
      to: range.to,
      with_extra: withExtra ? undefined : "false", // server default is true
    });
    return this.request("GET", `/meters/${encodeURIComponent(meterId)}/bill${query}`);
  }

  tariff(): Promise<Tariff> {
    return this.request("GET", "/tariff");
  }

  setTariff(tariff: Tariff): Promise<Tariff> {
    return this.request("PUT", "/tariff", tariff);
  }

  ingestTelegram(fromNumber: string, body: string, receivedAtS: number): Promise<unknown> {
    return this.request("POST", "/telegrams", {
      from_number: fromNumber,
      body,
      received_at_s: receivedAtS,
    });
  }

  panel(meterId: string): Promise<Panel> {
    return this.request("GET", `/sim/meters/${encodeURIComponent(meterId)}/panel`);
  }

  sendKeys(meterId: string, keys: MeterKey[]): Promise<{ queued: number }> {
    return this.request("POST", `/sim/meters/${encodeURIComponent(meterId)}/keys`, { keys });
  }

  setLoad(meterId: string, powerW: number): Promise<{ meter_id: string; power_w: number }> {
    return this.request("POST", `/sim/meters/${encodeURIComponent(meterId)}/load`, {
      power_w: powerW,
    });
  }
}

function buildQuery(params: Record<string, number | string | undefined>): string {
  const parts: string[] = [];
  for (const [key, value] of Object.entries(params)) {
    if (value !== undefined) {
      parts.push(`${encodeURIComponent(key)}=${encodeURIComponent(String(value))}`);
    }
  }
  return parts.length ? `?${parts.join("&")}` : "";
}
