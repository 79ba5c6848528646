// Page wiring: poll the central shell for twins, render the fleet table,
// and drive the selected twin's detail view (status, chart, commands,
// events). Network errors surface in the banner, never as a blank page.

import { CentralClient, TwinClient, type CommandName, type TwinRegistration, type TwinStatus } from './api.js';
import { plotTimeseries } from './chart.js';
import { Poller } from './poll.js';
import { renderTwinList, ticketRow, validateCommandForm, validateEventForm } from './views.js';

const POLL_INTERVAL_MS = 2000;

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

const banner = el<HTMLDivElement>('banner');

function showError(message: string): void {
  banner.textContent = message;
  banner.hidden = false;
}

function clearError(): void {
  banner.hidden = true;
}

interface AppState {
  central: CentralClient;
  registrations: TwinRegistration[];
  statuses: Map<string, TwinStatus | null>;
  selected: string | null;
  tickets: string[]; // ticket ids for the selected twin, newest first
}

const params = new URLSearchParams(location.search);
const centralUrl = params.get('central') ?? localStorage.getItem('centralUrl') ?? 'http://127.0.0.1:8000';

const state: AppState = {
  central: new CentralClient(centralUrl),
  registrations: [],
  statuses: new Map(),
  selected: null,
  tickets: [],
};

function twinClient(twinId: string): TwinClient | null {
  const reg = state.registrations.find((r) => r.twin_id === twinId);
  return reg ? new TwinClient(reg.base_url) : null;
}

function latestContactNs(): number {
  let max = 0;
  for (const status of state.statuses.values()) {
    if (status?.last_contact_t_ns) max = Math.max(max, status.last_contact_t_ns);
  }
  return max;
}

function renderFleet(): void {
  const view = renderTwinList(state.registrations, state.statuses, latestContactNs());
  const tbody = el<HTMLTableSectionElement>('twin-rows');
  tbody.replaceChildren();
  el<HTMLParagraphElement>('twin-empty').textContent = view.emptyMessage ?? '';
  for (const row of view.rows) {
    const tr = document.createElement('tr');
    tr.className = row.unreachable ? 'unreachable' : '';
    if (row.twinId === state.selected) tr.classList.add('selected');
    for (const text of [row.displayName, row.mode, row.battery, row.lastContact]) {
      const td = document.createElement('td');
      td.textContent = text;
      tr.append(td);
    }
    tr.addEventListener('click', () => selectTwin(row.twinId));
    tbody.append(tr);
  }
}

function renderDetail(): void {
  const panel = el<HTMLElement>('detail');
  panel.hidden = state.selected === null;
  if (state.selected === null) return;
  el<HTMLHeadingElement>('detail-title').textContent = state.selected;
  const status = state.statuses.get(state.selected) ?? null;
  el<HTMLDivElement>('detail-status').textContent = status
    ? `mode ${status.mode} · battery ${status.battery_pct === null ? '—' : status.battery_pct.toFixed(1) + '%'}`
      + ` · sampling every ${status.sampling_interval_s}s`
    : 'status unreachable';
}

async function refreshChart(): Promise<void> {
  if (state.selected === null) return;
  const client = twinClient(state.selected);
  if (!client) return;
  const points = await client.getTimeseries(`${state.selected}/o2`);
  el<HTMLDivElement>('chart').innerHTML = plotTimeseries(points, {
    width: 640,
    height: 240,
    unit: 'µmol/l',
  });
}

async function refreshTickets(): Promise<void> {
  if (state.selected === null) return;
  const client = twinClient(state.selected);
  if (!client) return;
  const list = el<HTMLUListElement>('tickets');
  const rows = await Promise.all(state.tickets.map((id) => client.pollCommand(id)));
  list.replaceChildren();
  for (const ticket of rows) {
    const row = ticketRow(ticket);
    const li = document.createElement('li');
    li.className = `ticket ${row.state}`;
    li.textContent = `${row.label} — ${row.state}`;
    list.append(li);
  }
}

function selectTwin(twinId: string): void {
  state.selected = twinId;
  state.tickets = [];
  el<HTMLUListElement>('tickets').replaceChildren();
  renderFleet();
  renderDetail();
  void refreshChart().catch((e) => showError(String(e)));
}

async function pollCentral(): Promise<void> {
  try {
    state.registrations = await state.central.listTwins();
    const checks = state.registrations.map(async (reg) => {
      try {
        state.statuses.set(reg.twin_id, await new TwinClient(reg.base_url).getStatus());
      } catch {
        state.statuses.set(reg.twin_id, null);
      }
    });
    await Promise.all(checks);
    clearError();
  } catch (e) {
    showError(`central shell unreachable at ${state.central.baseUrl}: ${e}`);
  }
  renderFleet();
  renderDetail();
}

function wireForms(): void {
  el<HTMLSpanElement>('central-url').textContent = centralUrl;

  const commandSelect = el<HTMLSelectElement>('command-name');
  const intervalInput = el<HTMLInputElement>('command-interval');
  commandSelect.addEventListener('change', () => {
    intervalInput.disabled = commandSelect.value !== 'set_sampling_interval';
  });

  el<HTMLFormElement>('command-form').addEventListener('submit', (event) => {
    event.preventDefault();
    if (state.selected === null) return;
    const check = validateCommandForm({
      command: commandSelect.value,
      intervalText: intervalInput.value,
    });
    const errorBox = el<HTMLSpanElement>('command-error');
    errorBox.textContent = check.error ?? '';
    if (check.error) return;
    const client = twinClient(state.selected);
    if (!client) return;
    client
      .submitCommand(commandSelect.value as CommandName, check.intervalS)
      .then((ticketId) => {
        state.tickets.unshift(ticketId);
        return refreshTickets();
      })
      .catch((e) => {
        errorBox.textContent = String(e);
      });
  });

  el<HTMLFormElement>('event-form').addEventListener('submit', (event) => {
    event.preventDefault();
    if (state.selected === null) return;
    const intervalText = el<HTMLInputElement>('event-interval').value;
    const check = validateEventForm(intervalText);
    const errorBox = el<HTMLSpanElement>('event-error');
    errorBox.textContent = check.error ?? '';
    if (check.error) return;
    const client = twinClient(state.selected);
    if (!client) return;
    client
      .injectEvent('storm_predicted', check.intervalS!)
      .then(() => {
        errorBox.textContent = 'event broadcast queued';
      })
      .catch((e) => {
        errorBox.textContent = String(e);
      });
  });
}

function start(): void {
  wireForms();
  const poller = new Poller(POLL_INTERVAL_MS);
  poller.add('central', pollCentral);
  poller.add('chart', () => refreshChart().catch(() => undefined));
  poller.add('tickets', () => refreshTickets().catch(() => undefined));
  poller.start();
}

start();
