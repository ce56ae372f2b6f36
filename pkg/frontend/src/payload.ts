/**
 * Canonical serialization of decision batches.
 *
 * The server treats the decision body as data, but the contract tests
 * hold the UI to a byte-stable form: fixed key order, sorted and
 * deduplicated id lists, compact JSON. Serializing a parsed fixture
 * must reproduce the fixture exactly.
 */

import type { DecisionEntry } from './types.js';

function sortedUnique(ids: Iterable<string>): string[] {
  return Array.from(new Set(ids)).sort();
}

/** Normalize one entry into the canonical field order and list form. */
export function canonicalEntry(entry: DecisionEntry): DecisionEntry {
  return {
    group_id: entry.group_id,
    added_ror_ids: sortedUnique(entry.added_ror_ids),
    removed_ror_ids: sortedUnique(entry.removed_ror_ids),
    contact_email: entry.contact_email,
  };
}

/**
 * The exact bytes sent as the POST body. JSON.stringify keeps object
 * key insertion order, so canonicalEntry fixes the layout.
 */
export function serializeDecisions(entries: DecisionEntry[]): string {
  return JSON.stringify(entries.map(canonicalEntry));
}

/** Parse a recorded payload back into entries, refusing junk. */
export function parseDecisions(text: string): DecisionEntry[] {
  const data = JSON.parse(text);
  if (!Array.isArray(data)) {
    throw new Error('decision payload must be a JSON array');
  }
  return data.map((raw, position) => {
    if (typeof raw !== 'object' || raw === null) {
      throw new Error(`decision ${position} is not an object`);
    }
    const entry = raw as Record<string, unknown>;
    if (typeof entry.group_id !== 'string' || typeof entry.contact_email !== 'string') {
      throw new Error(`decision ${position} is missing group_id or contact_email`);
    }
    return {
      group_id: entry.group_id,
      added_ror_ids: stringList(entry.added_ror_ids, position, 'added_ror_ids'),
      removed_ror_ids: stringList(entry.removed_ror_ids, position, 'removed_ror_ids'),
      contact_email: entry.contact_email,
    };
  });
}

function stringList(value: unknown, position: number, field: string): string[] {
  if (value === undefined || value === null) return [];
  if (!Array.isArray(value) || value.some((v) => typeof v !== 'string')) {
    throw new Error(`decision ${position}: ${field} must be a list of strings`);
  }
  return value as string[];
}
