/**
 * Shapes of the JSON payloads exchanged with the curation service.
 *
 * These mirror the server's wire format exactly; nothing in the UI
 * derives or recomputes them. If a field changes server-side, the
 * recorded contract fixtures under tests/fixtures stop matching and
 * the contract tests fail.
 */

export interface MatchEvidence {
  matched_tokens: string[];
  acronym_matched: boolean;
  country_consistent: boolean;
  exact_name: boolean;
}

export interface ScoredCandidate {
  ror_id: string;
  score: number;
  evidence: MatchEvidence;
}

export interface AffiliationGroup {
  group_id: string;
  raw_string: string;
  work_ids: string[];
  work_count: number;
  current_ror_ids: string[];
  suggestions: ScoredCandidate[];
}

export interface GroupsPage {
  task_id: string;
  total: number;
  offset: number;
  limit: number;
  groups: AffiliationGroup[];
}

export interface TaskProgress {
  done: number;
  total: number | null;
}

export type TaskState = 'queued' | 'running' | 'done' | 'failed';

export interface TaskResponse {
  task_id: string;
  kind: string;
  state: TaskState;
  progress: TaskProgress;
  result_ref: string | null;
  error: string | null;
  result: unknown;
}

/** One entry of the POST /api/tasks/{id}/decisions body. */
export interface DecisionEntry {
  group_id: string;
  added_ror_ids: string[];
  removed_ror_ids: string[];
  contact_email: string;
}

export interface DecisionResult {
  group_id: string;
  request_id?: string;
  error?: string;
}

export interface DecisionResponse {
  results: DecisionResult[];
}

export interface StatsPayload {
  total: number;
  pending_count: number;
  exported_count: number;
  open_count: number;
  closed_count: number;
  top_domains: [string, number][];
  per_previous_ror: Record<string, number>;
}
