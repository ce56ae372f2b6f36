/**
 * HTML renderers. Every function is a pure string builder so the view
 * layer stays trivially testable; app.ts swaps the strings into the
 * document and wires events afterwards.
 */

import type { AffiliationGroup, StatsPayload, TaskResponse } from './types.js';
import type { ReviewQueueState } from './state.js';
import { isLocalNoOp, undecidedCount, visibleGroups } from './state.js';

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, '&amp;')
    .replace(/</g, '&lt;')
    .replace(/>/g, '&gt;')
    .replace(/"/g, '&quot;')
    .replace(/'/g, '&#39;');
}

/** Rows actually rendered at once; the rest scroll in page by page. */
export const TABLE_WINDOW = 200;

export function renderBadge(state: ReviewQueueState): string {
  return `<span class="badge" data-role="queue-badge">${undecidedCount(state)}</span>`;
}

function renderSuggestion(group: AffiliationGroup, index: number): string {
  const s = group.suggestions[index];
  const flags = [
    s.evidence.exact_name ? 'exact' : '',
    s.evidence.acronym_matched ? 'acronym' : '',
    s.evidence.country_consistent ? 'country' : '',
  ]
    .filter(Boolean)
    .join(' ');
  return (
    `<button class="suggestion" data-group="${group.group_id}" data-ror="${s.ror_id}">` +
    `${escapeHtml(s.ror_id)} <span class="score">${s.score.toFixed(2)}</span>` +
    (flags ? ` <span class="flags">${flags}</span>` : '') +
    `</button>`
  );
}

function renderGroupRow(state: ReviewQueueState, group: AffiliationGroup): string {
  const decision = state.decided.get(group.group_id);
  const chips: string[] = [];
  if (decision) {
    for (const ror of Array.from(decision.added).sort()) {
      chips.push(`<span class="chip add">+${escapeHtml(ror)}</span>`);
    }
    for (const ror of Array.from(decision.removed).sort()) {
      chips.push(`<span class="chip remove">&minus;${escapeHtml(ror)}</span>`);
    }
  }
  const noop = decision && isLocalNoOp(state, group.group_id);
  const current = group.current_ror_ids
    .map(
      (ror) =>
        `<button class="current-ror" data-group="${group.group_id}" data-ror="${escapeHtml(ror)}">${escapeHtml(ror)}</button>`,
    )
    .join(' ');
  return (
    `<tr data-group="${group.group_id}"${decision ? ' class="decided"' : ''}>` +
    `<td class="raw">${escapeHtml(group.raw_string)}</td>` +
    `<td class="count">${group.work_count}</td>` +
    `<td class="current">${current || '<span class="none">none</span>'}</td>` +
    `<td class="suggestions">${group.suggestions.map((_, i) => renderSuggestion(group, i)).join(' ')}</td>` +
    `<td class="decision">${chips.join(' ')}` +
    (noop ? ' <span class="noop-warning">no effect</span>' : '') +
    (decision ? ` <button class="undo" data-group="${group.group_id}">undo</button>` : '') +
    `</td>` +
    `</tr>`
  );
}

/**
 * The review table. Harvests can return thousands of groups, so only a
 * window of rows goes into the DOM; offset moves in TABLE_WINDOW steps.
 */
export function renderGroupTable(state: ReviewQueueState, offset = 0): string {
  const visible = visibleGroups(state);
  const windowed = visible.slice(offset, offset + TABLE_WINDOW);
  const rows = windowed.map((g) => renderGroupRow(state, g)).join('');
  const footer =
    visible.length > TABLE_WINDOW
      ? `<div class="table-pager" data-offset="${offset}" data-total="${visible.length}">` +
        `showing ${offset + 1}&ndash;${offset + windowed.length} of ${visible.length}` +
        `<button class="pager-prev"${offset === 0 ? ' disabled' : ''}>prev</button>` +
        `<button class="pager-next"${offset + TABLE_WINDOW >= visible.length ? ' disabled' : ''}>next</button>` +
        `</div>`
      : '';
  return (
    `<table class="groups">` +
    `<thead><tr><th>raw affiliation</th><th>works</th><th>current</th><th>suggestions</th><th>decision</th></tr></thead>` +
    `<tbody>${rows}</tbody>` +
    `</table>` +
    footer
  );
}

export function renderTaskProgress(task: TaskResponse): string {
  if (task.state === 'failed') {
    return `<div class="banner error">task failed: ${escapeHtml(task.error ?? 'unknown error')}</div>`;
  }
  const total = task.progress.total;
  const pages = total === null ? `${task.progress.done} pages` : `${task.progress.done}/${total} pages`;
  return `<div class="progress" data-state="${task.state}">${task.state}: ${pages}</div>`;
}

/** The dashboard repeats the stats payload verbatim; no arithmetic here. */
export function renderDashboard(stats: StatsPayload): string {
  const domains = stats.top_domains
    .map(
      ([domain, count]) =>
        `<tr><td>${escapeHtml(domain)}</td><td class="num">${count}</td></tr>`,
    )
    .join('');
  const perRor = Object.entries(stats.per_previous_ror)
    .map(
      ([ror, count]) =>
        `<tr><td>${escapeHtml(ror)}</td><td class="num">${count}</td></tr>`,
    )
    .join('');
  return (
    `<div class="dashboard">` +
    `<div class="figures">` +
    `<div class="figure"><span class="value" data-stat="total">${stats.total}</span><span class="label">corrections</span></div>` +
    `<div class="figure"><span class="value" data-stat="pending">${stats.pending_count}</span><span class="label">pending</span></div>` +
    `<div class="figure"><span class="value" data-stat="exported">${stats.exported_count}</span><span class="label">exported</span></div>` +
    `<div class="figure"><span class="value" data-stat="open">${stats.open_count}</span><span class="label">open</span></div>` +
    `<div class="figure"><span class="value" data-stat="closed">${stats.closed_count}</span><span class="label">closed</span></div>` +
    `</div>` +
    `<div class="tables">` +
    `<table class="top-domains"><caption>top contributor domains</caption>` +
    `<tbody>${domains || '<tr><td class="none" colspan="2">none yet</td></tr>'}</tbody></table>` +
    `<table class="per-ror"><caption>corrections per previous ror</caption>` +
    `<tbody>${perRor || '<tr><td class="none" colspan="2">none yet</td></tr>'}</tbody></table>` +
    `</div>` +
    `</div>`
  );
}

export function renderEmptyDashboard(message: string): string {
  return (
    `<div class="dashboard empty">` +
    `<p>${escapeHtml(message)}</p>` +
    `<button class="retry" data-role="stats-retry">retry</button>` +
    `</div>`
  );
}
