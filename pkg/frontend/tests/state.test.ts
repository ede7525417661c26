import { describe, expect, it } from "vitest";

import { QueryStore } from "../src/state.js";
import type { Hit } from "../src/types.js";

const hits: Hit[] = [
  { image_id: "a", cnnc_distance: 1, rbc_distance: 2, final_rank: 1 },
];

describe("QueryStore", () => {
  it("commits the freshest query only", () => {
    const store = new QueryStore();
    const first = store.beginQuery();
    const second = store.beginQuery();
    expect(store.commitQuery(first, "stale", hits)).toBe(false);
    expect(store.state).toBeNull();
    expect(store.commitQuery(second, "fresh", hits)).toBe(true);
    expect(store.state?.queryId).toBe("fresh");
  });

  it("discards roi outcomes for superseded queries", () => {
    const store = new QueryStore();
    store.commitQuery(store.beginQuery(), "q1", hits);
    store.setRoi({ x: 0, y: 0, w: 2, h: 2 });
    expect(
      store.commitMatches("other-query", [
        { target_image_id: "a", x: 0, y: 0, w: 1, h: 1, score: 1 },
      ]),
    ).toBe(false);
    expect(store.state?.matches).toBeNull();
    expect(
      store.commitMatches("q1", [
        { target_image_id: "a", x: 0, y: 0, w: 1, h: 1, score: 1 },
      ]),
    ).toBe(true);
    expect(store.state?.matches?.get("a")).toEqual({
      kind: "box",
      box: { x: 0, y: 0, w: 1, h: 1 },
      score: 1,
    });
  });

  it("new queries reset the roi and matches", () => {
    const store = new QueryStore();
    store.commitQuery(store.beginQuery(), "q1", hits);
    store.setRoi({ x: 1, y: 1, w: 2, h: 2 });
    store.commitQuery(store.beginQuery(), "q2", hits);
    expect(store.state?.selectedRoi).toBeNull();
    expect(store.state?.matches).toBeNull();
  });

  it("maps error entries to error outcomes", () => {
    const store = new QueryStore();
    store.commitQuery(store.beginQuery(), "q1", hits);
    store.commitMatches("q1", [{ target_image_id: "a", error: "too small" }]);
    expect(store.state?.matches?.get("a")).toEqual({ kind: "error", message: "too small" });
  });

  it("clearing the roi clears matches too", () => {
    const store = new QueryStore();
    store.commitQuery(store.beginQuery(), "q1", hits);
    store.setRoi({ x: 0, y: 0, w: 2, h: 2 });
    store.commitMatches("q1", [{ target_image_id: "a", error: "x" }]);
    store.setRoi(null);
    expect(store.state?.matches).toBeNull();
  });
});
