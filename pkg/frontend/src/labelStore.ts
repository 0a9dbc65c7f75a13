/** In-progress label choices, persisted per (session, iteration).
 *
 * Backed by any Storage-shaped store (window.localStorage in the browser,
 * an in-memory fake in tests) so choices survive a page reload and are
 * only cleared once the service has accepted them.
 */

import type { Label } from "./types.js";

export interface KeyValueStore {
  getItem(key: string): string | null;
  setItem(key: string, value: string): void;
  removeItem(key: string): void;
}

export class MemoryStore implements KeyValueStore {
  private data = new Map<string, string>();

  getItem(key: string): string | null {
    return this.data.get(key) ?? null;
  }

  setItem(key: string, value: string): void {
    this.data.set(key, value);
  }

  removeItem(key: string): void {
    this.data.delete(key);
  }
}

export class LabelStore {
  private readonly key: string;
  private labels: Record<number, Label>;

  constructor(
    private readonly store: KeyValueStore,
    sessionId: string,
    iteration: number,
  ) {
    this.key = `anorank:${sessionId}:${iteration}`;
    this.labels = this.load();
  }

  private load(): Record<number, Label> {
    const raw = this.store.getItem(this.key);
    if (!raw) return {};
    try {
      return JSON.parse(raw) as Record<number, Label>;
    } catch {
      return {};
    }
  }

  set(sampleId: number, label: Label | null): void {
    if (label === null) {
      delete this.labels[sampleId];
    } else {
      this.labels[sampleId] = label;
    }
    this.store.setItem(this.key, JSON.stringify(this.labels));
  }

  get(sampleId: number): Label | null {
    return this.labels[sampleId] ?? null;
  }

  all(): Record<number, Label> {
    return { ...this.labels };
  }

  /** True once every pending card has a choice; gates the submit button. */
  isComplete(pendingIds: number[]): boolean {
    return pendingIds.length > 0 && pendingIds.every((id) => id in this.labels);
  }

  labeledCount(pendingIds: number[]): number {
    return pendingIds.filter((id) => id in this.labels).length;
  }

  clear(): void {
    this.labels = {};
    this.store.removeItem(this.key);
  }
}
