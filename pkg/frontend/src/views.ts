// Pure view models: given API responses, compute exactly what each widget
// shows. The DOM layer renders these verbatim, which keeps everything here
// testable without a browser.

import type { CommandTicket, TwinRegistration, TwinStatus } from './api.js';

export interface TwinRow {
  twinId: string;
  displayName: string;
  mode: string;
  battery: string;       // "87.5%" or "—"
  lastContact: string;   // "12s ago", "never", or "unreachable"
  unreachable: boolean;
}

export interface TwinListView {
  rows: TwinRow[];
  emptyMessage: string | null;
}

export function formatAge(nowNs: number, thenNs: number | null): string {
  if (thenNs === null) return 'never';
  const seconds = Math.max(0, Math.floor((nowNs - thenNs) / 1e9));
  if (seconds < 60) return `${seconds}s ago`;
  if (seconds < 3600) return `${Math.floor(seconds / 60)}m ago`;
  return `${Math.floor(seconds / 3600)}h ago`;
}

export function renderTwinList(
  registrations: TwinRegistration[],
  statuses: Map<string, TwinStatus | null>,
  nowNs: number,
): TwinListView {
  const seen = new Set<string>();
  const rows: TwinRow[] = [];
  for (const reg of registrations) {
    if (seen.has(reg.twin_id)) continue; // registry guarantees uniqueness; first wins
    seen.add(reg.twin_id);
    const status = statuses.get(reg.twin_id) ?? null;
    if (status === null) {
      rows.push({
        twinId: reg.twin_id,
        displayName: reg.display_name || reg.twin_id,
        mode: '?',
        battery: '—',
        lastContact: 'unreachable',
        unreachable: true,
      });
      continue;
    }
    rows.push({
      twinId: reg.twin_id,
      displayName: reg.display_name || reg.twin_id,
      mode: status.mode,
      battery: status.battery_pct === null ? '—' : `${status.battery_pct.toFixed(1)}%`,
      lastContact: formatAge(nowNs, status.last_contact_t_ns),
      unreachable: false,
    });
  }
  return { rows, emptyMessage: rows.length ? null : 'No twins registered yet.' };
}

export interface TicketRow {
  ticketId: string;
  label: string;   // "set_sampling_interval(600)" or "report_status"
  state: string;
  terminal: boolean;
}

export function ticketRow(ticket: CommandTicket): TicketRow {
  const label = ticket.command === 'set_sampling_interval'
    ? `${ticket.command}(${ticket.interval_s})`
    : ticket.command;
  return {
    ticketId: ticket.ticket_id,
    label,
    state: ticket.state,
    terminal: ticket.state !== 'pending',
  };
}

export interface CommandFormInput {
  command: string;
  intervalText: string;
}

// interval must be a whole number of seconds the ack can carry (uint16)
export function validateCommandForm(input: CommandFormInput): { intervalS?: number; error: string | null } {
  if (input.command !== 'set_sampling_interval') return { error: null };
  const n = Number(input.intervalText);
  if (!Number.isInteger(n) || n < 1 || n > 65535) {
    return { error: 'interval must be an integer between 1 and 65535 seconds' };
  }
  return { intervalS: n, error: null };
}

export function validateEventForm(intervalText: string): { intervalS?: number; error: string | null } {
  const n = Number(intervalText);
  if (!Number.isInteger(n) || n < 1 || n > 65535) {
    return { error: 'interval must be an integer between 1 and 65535 seconds' };
  }
  return { intervalS: n, error: null };
}
