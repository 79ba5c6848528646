// Typed client of the Administration Shell HTTP API. The dashboard never
// talks to anything but these endpoints.

export interface TwinRegistration {
  twin_id: string;
  display_name: string;
  base_url: string;
  registered_at_ns: number;
}

export interface TwinStatus {
  twin_id: string;
  mode: 'emulated' | 'real' | 'mixed';
  battery_pct: number | null;
  sampling_interval_s: number;
  last_contact_t_ns: number | null;
}

export type TicketState = 'pending' | 'acked' | 'failed';

export interface CommandTicket {
  ticket_id: string;
  twin_id: string;
  command: string;
  interval_s: number;
  state: TicketState;
  submitted_at_ns: number | null;
  resolved_at_ns: number | null;
  transmissions: number;
}

export interface TimeseriesPoint {
  t_ns: number;
  value: number;
}

export type CommandName = 'set_sampling_interval' | 'trigger_measurement' | 'report_status';

export class ApiError extends Error {
  constructor(readonly status: number, message: string) {
    super(message);
  }
}

async function request<T>(url: string, init?: RequestInit): Promise<T> {
  const resp = await fetch(url, init);
  const body = await resp.json().catch(() => null);
  if (!resp.ok) {
    const detail = body && typeof body.error === 'string' ? body.error : resp.statusText;
    throw new ApiError(resp.status, detail);
  }
  return body as T;
}

export class CentralClient {
  constructor(readonly baseUrl: string) {}

  listTwins(): Promise<TwinRegistration[]> {
    return request(`${this.baseUrl}/api/v1/twins`);
  }
}

export class TwinClient {
  constructor(readonly baseUrl: string) {}

  getStatus(): Promise<TwinStatus> {
    return request(`${this.baseUrl}/api/v1/status`);
  }

  getTimeseries(topic: string, limit = 500): Promise<TimeseriesPoint[]> {
    const encoded = topic.split('/').map(encodeURIComponent).join('/');
    return request(`${this.baseUrl}/api/v1/timeseries/${encoded}?limit=${limit}`);
  }

  async submitCommand(command: CommandName, intervalS?: number): Promise<string> {
    const args = intervalS === undefined ? {} : { interval_s: intervalS };
    const body = await request<{ ticket_id: string }>(`${this.baseUrl}/api/v1/command`, {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify({ command, args }),
    });
    return body.ticket_id;
  }

  pollCommand(ticketId: string): Promise<CommandTicket> {
    return request(`${this.baseUrl}/api/v1/commands/${encodeURIComponent(ticketId)}`);
  }

  injectEvent(eventCode: 'storm_predicted' | number, newIntervalS: number): Promise<void> {
    return request(`${this.baseUrl}/api/v1/event`, {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify({ event_code: eventCode, new_sampling_interval_s: newIntervalS }),
    });
  }
}
