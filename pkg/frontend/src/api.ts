/**
 * Thin client over the curation service routes. No retries beyond what
 * the polling loop does; errors bubble with the server's message when
 * one is present.
 */

import type {
  DecisionEntry,
  DecisionResponse,
  GroupsPage,
  StatsPayload,
  TaskResponse,
} from './types.js';
import { serializeDecisions } from './payload.js';

export const POLL_INTERVAL_MS = 2000;
export const POLL_BACKOFF_FACTOR = 2;
export const POLL_MAX_INTERVAL_MS = 30000;

type FetchLike = typeof fetch;
type Scheduler = (fn: () => void, ms: number) => void;

export interface HarvestForm {
  mode: 'by_ror' | 'by_affiliation_search' | 'by_doi_list';
  value: string | string[];
  year_from?: number;
  year_to?: number;
}

async function readError(response: Response): Promise<string> {
  try {
    const body = await response.json();
    if (body && typeof body.error === 'string') return body.error;
  } catch {
    // fall through to the status line
  }
  return `request failed with status ${response.status}`;
}

export class ApiClient {
  private base: string;

  private fetchImpl: FetchLike;

  private schedule: Scheduler;

  constructor(
    base = '',
    fetchImpl: FetchLike = fetch,
    schedule: Scheduler = (fn, ms) => {
      setTimeout(fn, ms);
    },
  ) {
    this.base = base.replace(/\/$/, '');
    this.fetchImpl = fetchImpl;
    this.schedule = schedule;
  }

  private async getJson<T>(path: string): Promise<T> {
    const response = await this.fetchImpl(`${this.base}${path}`);
    if (!response.ok) throw new Error(await readError(response));
    return (await response.json()) as T;
  }

  async startHarvest(form: HarvestForm): Promise<string> {
    const response = await this.fetchImpl(`${this.base}/api/tasks`, {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify(form),
    });
    if (!response.ok) throw new Error(await readError(response));
    const body = (await response.json()) as { task_id: string };
    return body.task_id;
  }

  async getTask(taskId: string): Promise<TaskResponse> {
    return this.getJson(`/api/tasks/${taskId}`);
  }

  /**
   * Poll a task to its terminal state. The interval starts at 2s and
   * doubles after each transport error, recovering to the base interval
   * on the next good response; server "failed" states resolve normally
   * so the caller can show the error.
   */
  pollTask(taskId: string, onUpdate?: (task: TaskResponse) => void): Promise<TaskResponse> {
    return new Promise((resolve, reject) => {
      let interval = POLL_INTERVAL_MS;
      let failures = 0;
      const tick = async () => {
        let task: TaskResponse;
        try {
          task = await this.getTask(taskId);
        } catch (err) {
          failures += 1;
          if (failures >= 5) {
            reject(err instanceof Error ? err : new Error(String(err)));
            return;
          }
          interval = Math.min(interval * POLL_BACKOFF_FACTOR, POLL_MAX_INTERVAL_MS);
          this.schedule(tick, interval);
          return;
        }
        failures = 0;
        interval = POLL_INTERVAL_MS;
        if (onUpdate) onUpdate(task);
        if (task.state === 'done' || task.state === 'failed') {
          resolve(task);
          return;
        }
        this.schedule(tick, interval);
      };
      tick();
    });
  }

  async fetchGroups(taskId: string, offset = 0, limit = 100): Promise<GroupsPage> {
    return this.getJson(`/api/tasks/${taskId}/groups?offset=${offset}&limit=${limit}`);
  }

  /** Every loaded page of a finished harvest, in server order. */
  async fetchAllGroups(taskId: string): Promise<GroupsPage['groups']> {
    const groups: GroupsPage['groups'] = [];
    let offset = 0;
    for (;;) {
      const page = await this.fetchGroups(taskId, offset, 200);
      groups.push(...page.groups);
      offset += page.groups.length;
      if (page.groups.length === 0 || offset >= page.total) return groups;
    }
  }

  /**
   * Submit a decision batch. The body bytes come from
   * serializeDecisions, the same canonical form the contract fixtures
   * are recorded in.
   */
  async submitDecisions(taskId: string, entries: DecisionEntry[]): Promise<DecisionResponse> {
    const response = await this.fetchImpl(`${this.base}/api/tasks/${taskId}/decisions`, {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: serializeDecisions(entries),
    });
    if (!response.ok) throw new Error(await readError(response));
    return (await response.json()) as DecisionResponse;
  }

  async fetchStats(): Promise<StatsPayload> {
    return this.getJson('/api/stats');
  }

  async startExport(): Promise<string> {
    const response = await this.fetchImpl(`${this.base}/api/export`, { method: 'POST' });
    if (!response.ok) throw new Error(await readError(response));
    const body = (await response.json()) as { task_id: string };
    return body.task_id;
  }

  async startSync(): Promise<string> {
    const response = await this.fetchImpl(`${this.base}/api/sync`, { method: 'POST' });
    if (!response.ok) throw new Error(await readError(response));
    const body = (await response.json()) as { task_id: string };
    return body.task_id;
  }
}
