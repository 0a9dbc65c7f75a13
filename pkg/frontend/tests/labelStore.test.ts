import { describe, expect, it } from "vitest";

import { LabelStore, MemoryStore } from "../src/labelStore.js";

describe("LabelStore", () => {
  it("tracks choices per sample", () => {
    const store = new LabelStore(new MemoryStore(), "s1", 0);
    store.set(4, "anomaly");
    store.set(9, "normal");
    expect(store.get(4)).toBe("anomaly");
    expect(store.all()).toEqual({ 4: "anomaly", 9: "normal" });
  });

  it("is complete only when every pending id is chosen", () => {
    const store = new LabelStore(new MemoryStore(), "s1", 0);
    expect(store.isComplete([1, 2])).toBe(false);
    store.set(1, "normal");
    expect(store.isComplete([1, 2])).toBe(false);
    expect(store.labeledCount([1, 2])).toBe(1);
    store.set(2, "anomaly");
    expect(store.isComplete([1, 2])).toBe(true);
  });

  it("never reports complete for an empty batch", () => {
    const store = new LabelStore(new MemoryStore(), "s1", 0);
    expect(store.isComplete([])).toBe(false);
  });

  it("survives a reload of the same session and iteration", () => {
    const backing = new MemoryStore();
    const first = new LabelStore(backing, "s1", 3);
    first.set(7, "anomaly");
    const reloaded = new LabelStore(backing, "s1", 3);
    expect(reloaded.get(7)).toBe("anomaly");
  });

  it("does not leak choices across iterations or sessions", () => {
    const backing = new MemoryStore();
    new LabelStore(backing, "s1", 0).set(7, "anomaly");
    expect(new LabelStore(backing, "s1", 1).get(7)).toBeNull();
    expect(new LabelStore(backing, "s2", 0).get(7)).toBeNull();
  });

  it("unsetting removes the choice; clear wipes the batch", () => {
    const backing = new MemoryStore();
    const store = new LabelStore(backing, "s1", 0);
    store.set(1, "normal");
    store.set(1, null);
    expect(store.get(1)).toBeNull();
    store.set(2, "anomaly");
    store.clear();
    expect(new LabelStore(backing, "s1", 0).all()).toEqual({});
  });

  it("ignores corrupted persisted payloads", () => {
    const backing = new MemoryStore();
    backing.setItem("anorank:s1:0", "{nope");
    expect(new LabelStore(backing, "s1", 0).all()).toEqual({});
  });
});
