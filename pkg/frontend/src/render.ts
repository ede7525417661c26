/** DOM rendering. Every number shown on screen is copied verbatim from a
 * service response field; nothing is recomputed client-side. */

import type { Hit, IndexStats } from "./types.js";
import type { RoiOutcome } from "./state.js";
import { rectToPercent } from "./roi.js";

export function renderBanner(area: HTMLElement, message: string): void {
  const banner = area.ownerDocument.createElement("div");
  banner.className = "banner";
  const text = area.ownerDocument.createElement("span");
  text.textContent = message;
  const dismiss = area.ownerDocument.createElement("button");
  dismiss.className = "banner-dismiss";
  dismiss.textContent = "dismiss";
  dismiss.addEventListener("click", () => banner.remove());
  banner.append(text, dismiss);
  area.append(banner);
}

export function renderStats(el: HTMLElement, stats: IndexStats): void {
  el.textContent =
    `${stats.entry_count} images indexed · ` +
    `CNNC ${stats.cnnc_bits} bits · RBC ${stats.rbc_bits} bits`;
}

/** Rebuild the results grid; tiles appear in final_rank order. */
export function renderHits(
  grid: HTMLElement,
  hits: Hit[],
  imageUrl: (imageId: string) => string,
): void {
  grid.replaceChildren();
  const doc = grid.ownerDocument;
  const ordered = [...hits].sort((a, b) => a.final_rank - b.final_rank);
  for (const hit of ordered) {
    const tile = doc.createElement("figure");
    tile.className = "hit";
    tile.dataset.imageId = hit.image_id;
    tile.dataset.finalRank = String(hit.final_rank);

    const wrap = doc.createElement("div");
    wrap.className = "thumb-wrap";
    const img = doc.createElement("img");
    img.src = imageUrl(hit.image_id);
    img.alt = hit.image_id;
    wrap.append(img);
    tile.append(wrap);

    const caption = doc.createElement("figcaption");
    const rank = doc.createElement("span");
    rank.className = "rank";
    rank.textContent = `#${hit.final_rank}`;
    const name = doc.createElement("span");
    name.className = "hit-id";
    name.textContent = hit.image_id;
    const distances = doc.createElement("span");
    distances.className = "distances";
    distances.textContent = `cnnc ${hit.cnnc_distance} · rbc ${hit.rbc_distance}`;
    caption.append(rank, " ", name, doc.createElement("br"), distances);
    tile.append(caption);
    grid.append(tile);
  }
}

/** Overlay each tile with its ROI outcome: a box with the score, or an
 * error marker. Tiles without an outcome are left untouched. */
export function renderMatches(grid: HTMLElement, outcomes: Map<string, RoiOutcome>): void {
  const doc = grid.ownerDocument;
  for (const tile of Array.from(grid.querySelectorAll<HTMLElement>(".hit"))) {
    const wrap = tile.querySelector<HTMLElement>(".thumb-wrap");
    if (!wrap) continue;
    for (const old of Array.from(wrap.querySelectorAll(".match-box, .match-error"))) {
      old.remove();
    }
    const outcome = outcomes.get(tile.dataset.imageId ?? "");
    if (!outcome) continue;
    if (outcome.kind === "error") {
      const marker = doc.createElement("div");
      marker.className = "match-error";
      marker.title = outcome.message;
      marker.textContent = "no match: " + outcome.message;
      wrap.append(marker);
      continue;
    }
    const box = doc.createElement("div");
    box.className = "match-box";
    box.dataset.x = String(outcome.box.x);
    box.dataset.y = String(outcome.box.y);
    box.dataset.w = String(outcome.box.w);
    box.dataset.h = String(outcome.box.h);
    const score = doc.createElement("span");
    score.className = "match-score";
    score.textContent = outcome.score.toFixed(1);
    box.append(score);
    const img = wrap.querySelector("img");
    const place = () => {
      if (!img || !img.naturalWidth || !img.naturalHeight) return;
      const pct = rectToPercent(outcome.box, img.naturalWidth, img.naturalHeight);
      box.style.left = pct.left;
      box.style.top = pct.top;
      box.style.width = pct.width;
      box.style.height = pct.height;
    };
    if (img && img.complete && img.naturalWidth) {
      place();
    } else if (img) {
      img.addEventListener("load", place, { once: true });
    }
    wrap.append(box);
  }
}
