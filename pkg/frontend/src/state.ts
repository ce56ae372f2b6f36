/**
 * Local review-queue state.
 *
 * All domain judgement stays server-side; this module only tracks what
 * the curator has picked so far, the undecided badge, and the text
 * filter. Decisions live keyed by group_id until the server
 * acknowledges them.
 */

import type { AffiliationGroup, DecisionEntry, DecisionResult } from './types.js';
import { canonicalEntry } from './payload.js';

export interface LocalDecision {
  added: Set<string>;
  removed: Set<string>;
}

export interface ReviewQueueState {
  taskId: string;
  groups: AffiliationGroup[];
  decided: Map<string, LocalDecision>;
  filter: string;
  contactEmail: string;
}

export function createQueue(taskId: string, groups: AffiliationGroup[]): ReviewQueueState {
  return { taskId, groups, decided: new Map(), filter: '', contactEmail: '' };
}

function groupById(state: ReviewQueueState, groupId: string): AffiliationGroup {
  const group = state.groups.find((g) => g.group_id === groupId);
  if (!group) throw new Error(`unknown group ${groupId}`);
  return group;
}

function decisionFor(state: ReviewQueueState, groupId: string): LocalDecision {
  let decision = state.decided.get(groupId);
  if (!decision) {
    decision = { added: new Set(), removed: new Set() };
    state.decided.set(groupId, decision);
  }
  return decision;
}

/** Curator accepts a suggested ror for the group. */
export function acceptSuggestion(state: ReviewQueueState, groupId: string, rorId: string): void {
  groupById(state, groupId);
  decisionFor(state, groupId).added.add(rorId);
}

/** Curator strikes one of the group's currently assigned rors. */
export function removeCurrent(state: ReviewQueueState, groupId: string, rorId: string): void {
  groupById(state, groupId);
  decisionFor(state, groupId).removed.add(rorId);
}

/** Drop the whole local decision for a group, restoring it untouched. */
export function undoDecision(state: ReviewQueueState, groupId: string): void {
  state.decided.delete(groupId);
}

/** Count of groups with no local decision yet; drives the queue badge. */
export function undecidedCount(state: ReviewQueueState): number {
  let decidedLoaded = 0;
  for (const group of state.groups) {
    if (state.decided.has(group.group_id)) decidedLoaded += 1;
  }
  return state.groups.length - decidedLoaded;
}

/**
 * True when the local decision cannot change the group: every addition
 * is already assigned (or cancelled by a removal) and every removal
 * targets an unassigned ror. Mirrors the server's no-op rule so the
 * curator hears about it before submitting.
 */
export function isLocalNoOp(state: ReviewQueueState, groupId: string): boolean {
  const decision = state.decided.get(groupId);
  if (!decision) return true;
  const current = new Set(groupById(state, groupId).current_ror_ids);
  const next = new Set(current);
  for (const ror of decision.added) next.add(ror);
  for (const ror of decision.removed) next.delete(ror);
  if (next.size !== current.size) return false;
  for (const ror of next) {
    if (!current.has(ror)) return false;
  }
  return true;
}

/** Case-insensitive substring filter over raw affiliation strings. */
export function visibleGroups(state: ReviewQueueState): AffiliationGroup[] {
  const needle = state.filter.trim().toLowerCase();
  if (!needle) return state.groups;
  return state.groups.filter((g) => g.raw_string.toLowerCase().includes(needle));
}

/** The decision batch in canonical form, ready to serialize. */
export function buildEntries(state: ReviewQueueState): DecisionEntry[] {
  const entries: DecisionEntry[] = [];
  for (const group of state.groups) {
    const decision = state.decided.get(group.group_id);
    if (!decision) continue;
    entries.push(
      canonicalEntry({
        group_id: group.group_id,
        added_ror_ids: Array.from(decision.added),
        removed_ror_ids: Array.from(decision.removed),
        contact_email: state.contactEmail,
      }),
    );
  }
  return entries;
}

/**
 * Apply the server's per-entry results: acknowledged decisions leave
 * the local map, rejected ones stay for the curator to rework.
 */
export function clearAcknowledged(state: ReviewQueueState, results: DecisionResult[]): void {
  for (const result of results) {
    if (result.request_id) state.decided.delete(result.group_id);
  }
}

const EMAIL_SHAPE = /^[^@\s]+@[^@\s]+\.[^@\s]+$/;

export function emailLooksValid(email: string): boolean {
  return EMAIL_SHAPE.test(email.trim());
}
