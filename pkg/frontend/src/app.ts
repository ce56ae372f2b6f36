/**
 * Wiring for the review console. Three views (search, review queue,
 * dashboard) share one ApiClient; all rendering goes through the pure
 * builders in render.ts so this file stays confined to DOM plumbing.
 */

import { ApiClient } from './api.js';
import type { HarvestForm } from './api.js';
import {
  acceptSuggestion,
  buildEntries,
  clearAcknowledged,
  createQueue,
  emailLooksValid,
  removeCurrent,
  undoDecision,
} from './state.js';
import type { ReviewQueueState } from './state.js';
import {
  TABLE_WINDOW,
  escapeHtml,
  renderBadge,
  renderDashboard,
  renderEmptyDashboard,
  renderGroupTable,
  renderTaskProgress,
} from './render.js';

// shape-only precheck; the server owns real identifier validation
const ROR_SHAPE = /^0[0-9abcdefghjkmnpqrstvwxyz]{6}\d{2}$/;

declare global {
  interface Window {
    MAGNET_API_BASE?: string;
  }
}

const api = new ApiClient(window.MAGNET_API_BASE ?? '');

let queue: ReviewQueueState | null = null;
let tableOffset = 0;
let submitting = false;

function el(id: string): HTMLElement {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id} in index.html`);
  return node;
}

function setBanner(message: string, kind: 'error' | 'info' | '' = ''): void {
  const banner = el('banner');
  banner.className = kind ? `banner ${kind}` : 'banner hidden';
  banner.textContent = message;
}

function refreshBadge(): void {
  el('badge-slot').innerHTML = queue ? renderBadge(queue) : '';
}

function refreshTable(): void {
  if (!queue) return;
  el('review-table').innerHTML = renderGroupTable(queue, tableOffset);
  refreshBadge();
  wireTableEvents();
}

function wireTableEvents(): void {
  const table = el('review-table');
  table.querySelectorAll<HTMLButtonElement>('button.suggestion').forEach((button) => {
    button.addEventListener('click', () => {
      if (!queue) return;
      acceptSuggestion(queue, button.dataset.group!, button.dataset.ror!);
      refreshTable();
    });
  });
  table.querySelectorAll<HTMLButtonElement>('button.current-ror').forEach((button) => {
    button.addEventListener('click', () => {
      if (!queue) return;
      removeCurrent(queue, button.dataset.group!, button.dataset.ror!);
      refreshTable();
    });
  });
  table.querySelectorAll<HTMLButtonElement>('button.undo').forEach((button) => {
    button.addEventListener('click', () => {
      if (!queue) return;
      undoDecision(queue, button.dataset.group!);
      refreshTable();
    });
  });
  table.querySelectorAll<HTMLButtonElement>('.pager-prev').forEach((button) => {
    button.addEventListener('click', () => {
      tableOffset = Math.max(0, tableOffset - TABLE_WINDOW);
      refreshTable();
    });
  });
  table.querySelectorAll<HTMLButtonElement>('.pager-next').forEach((button) => {
    button.addEventListener('click', () => {
      tableOffset += TABLE_WINDOW;
      refreshTable();
    });
  });
}

function fieldError(id: string, message: string): void {
  el(id).textContent = message;
}

function validateForm(): HarvestForm | null {
  fieldError('err-value', '');
  fieldError('err-years', '');
  const mode = (el('search-mode') as HTMLSelectElement).value as HarvestForm['mode'];
  const value = (el('search-value') as HTMLInputElement).value.trim();
  const yearFromRaw = (el('year-from') as HTMLInputElement).value.trim();
  const yearToRaw = (el('year-to') as HTMLInputElement).value.trim();

  if (!value) {
    fieldError('err-value', 'enter a value to search for');
    return null;
  }
  if (mode === 'by_ror' && !ROR_SHAPE.test(value.replace(/^https:\/\/ror\.org\//, ''))) {
    fieldError('err-value', 'that does not look like a ROR id');
    return null;
  }
  const form: HarvestForm = {
    mode,
    value: mode === 'by_doi_list' ? value.split(/\s+/).filter(Boolean) : value,
  };
  const yearFrom = yearFromRaw ? Number(yearFromRaw) : undefined;
  const yearTo = yearToRaw ? Number(yearToRaw) : undefined;
  if (yearFrom !== undefined && yearTo !== undefined && yearFrom > yearTo) {
    fieldError('err-years', 'year range is inverted');
    return null;
  }
  if (yearFrom !== undefined) form.year_from = yearFrom;
  if (yearTo !== undefined) form.year_to = yearTo;
  return form;
}

async function runSearch(): Promise<void> {
  const form = validateForm();
  if (!form) return;
  setBanner('', '');
  el('progress-slot').textContent = 'starting…';
  let taskId: string;
  try {
    taskId = await api.startHarvest(form);
  } catch (err) {
    setBanner(err instanceof Error ? err.message : String(err), 'error');
    el('progress-slot').textContent = '';
    return;
  }
  const task = await api.pollTask(taskId, (update) => {
    el('progress-slot').innerHTML = renderTaskProgress(update);
  });
  if (task.state === 'failed') {
    setBanner(task.error ?? 'harvest failed', 'error');
    return;
  }
  const groups = await api.fetchAllGroups(taskId);
  queue = createQueue(taskId, groups);
  tableOffset = 0;
  showView('review');
  refreshTable();
}

async function submitBatch(): Promise<void> {
  if (!queue || submitting) return;
  const email = (el('contact-email') as HTMLInputElement).value.trim();
  if (!emailLooksValid(email)) {
    setBanner('enter a valid contact email before submitting', 'error');
    return;
  }
  queue.contactEmail = email;
  const entries = buildEntries(queue);
  if (entries.length === 0) {
    setBanner('no decisions to submit yet', 'info');
    return;
  }
  submitting = true;
  try {
    const response = await api.submitDecisions(queue.taskId, entries);
    clearAcknowledged(queue, response.results);
    const rejected = response.results.filter((r) => r.error);
    if (rejected.length) {
      setBanner(
        rejected.map((r) => `${r.group_id}: ${r.error}`).join('; '),
        'error',
      );
    } else {
      setBanner(`${response.results.length} decision(s) recorded`, 'info');
    }
  } catch (err) {
    // network failure: decided map is untouched, nothing is lost
    setBanner(
      `submit failed, decisions kept locally: ${err instanceof Error ? err.message : err}`,
      'error',
    );
  } finally {
    submitting = false;
    refreshTable();
  }
}

async function refreshDashboard(): Promise<void> {
  const slot = el('dashboard-slot');
  try {
    const stats = await api.fetchStats();
    slot.innerHTML = renderDashboard(stats);
  } catch (err) {
    slot.innerHTML = renderEmptyDashboard(
      err instanceof Error ? err.message : 'stats unavailable',
    );
    slot.querySelector('[data-role="stats-retry"]')?.addEventListener('click', () => {
      refreshDashboard();
    });
  }
}

function showView(name: 'search' | 'review' | 'dashboard'): void {
  for (const view of ['search', 'review', 'dashboard']) {
    el(`view-${view}`).classList.toggle('hidden', view !== name);
  }
  if (name === 'dashboard') refreshDashboard();
}

function init(): void {
  el('nav-search').addEventListener('click', () => showView('search'));
  el('nav-review').addEventListener('click', () => showView('review'));
  el('nav-dashboard').addEventListener('click', () => showView('dashboard'));
  el('search-go').addEventListener('click', () => {
    runSearch();
  });
  el('submit-batch').addEventListener('click', () => {
    submitBatch();
  });
  el('filter-input').addEventListener('input', (event) => {
    if (!queue) return;
    queue.filter = (event.target as HTMLInputElement).value;
    tableOffset = 0;
    refreshTable();
  });
  el('export-issues').addEventListener('click', async () => {
    try {
      const taskId = await api.startExport();
      const task = await api.pollTask(taskId);
      setBanner(
        task.state === 'done'
          ? `export finished: ${escapeHtml(JSON.stringify(task.result))}`
          : task.error ?? 'export failed',
        task.state === 'done' ? 'info' : 'error',
      );
    } catch (err) {
      setBanner(err instanceof Error ? err.message : String(err), 'error');
    }
  });
  showView('search');
}

document.addEventListener('DOMContentLoaded', init);
