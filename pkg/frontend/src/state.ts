/** Query session state. At most one query and one ROI request are in
 * flight; responses from superseded requests are discarded by sequence
 * token (queries) and query_id comparison (ROI matches). */

import type { Hit, Rect, RoiMatchEntry } from "./types.js";
import { isMatchError } from "./types.js";

export type RoiOutcome =
  | { kind: "box"; box: Rect; score: number }
  | { kind: "error"; message: string };

export interface UiQueryState {
  queryId: string;
  hits: Hit[];
  selectedRoi: Rect | null;
  matches: Map<string, RoiOutcome> | null;
}

export class QueryStore {
  state: UiQueryState | null = null;
  private querySeq = 0;

  /** Mark a new query in flight; the token identifies the freshest one. */
  beginQuery(): number {
    return ++this.querySeq;
  }

  /** Install a query result unless a newer query has started since. */
  commitQuery(token: number, queryId: string, hits: Hit[]): boolean {
    if (token !== this.querySeq) return false;
    this.state = { queryId, hits, selectedRoi: null, matches: null };
    return true;
  }

  setRoi(roi: Rect | null): void {
    if (this.state) {
      this.state.selectedRoi = roi;
      if (roi === null) this.state.matches = null;
    }
  }

  /** Install ROI outcomes unless they belong to a superseded query. */
  commitMatches(queryId: string, entries: RoiMatchEntry[]): boolean {
    if (!this.state || this.state.queryId !== queryId) return false;
    const outcomes = new Map<string, RoiOutcome>();
    for (const entry of entries) {
      outcomes.set(
        entry.target_image_id,
        isMatchError(entry)
          ? { kind: "error", message: entry.error }
          : { kind: "box", box: { x: entry.x, y: entry.y, w: entry.w, h: entry.h }, score: entry.score },
      );
    }
    this.state.matches = outcomes;
    return true;
  }
}
