/** Wires the page together: query submission, ROI drawing on the preview,
 * ROI matching against the current hits. The ApiClient is injected so the
 * whole flow can run against a mocked service in tests. */

import type { ApiClient } from "./api.js";
import { ApiError } from "./api.js";
import type { DisplayMetrics } from "./roi.js";
import { displayToNatural, dragToDisplayRect, naturalToDisplay } from "./roi.js";
import { QueryStore } from "./state.js";
import { renderBanner, renderHits, renderMatches, renderStats } from "./render.js";

interface Elements {
  banner: HTMLElement;
  stats: HTMLElement;
  fileInput: HTMLInputElement;
  storedId: HTMLInputElement;
  loadStored: HTMLButtonElement;
  search: HTMLButtonElement;
  preview: HTMLImageElement;
  roiLayer: HTMLElement;
  roiReadout: HTMLElement;
  roiMatch: HTMLButtonElement;
  roiClear: HTMLButtonElement;
  hits: HTMLElement;
}

function grab(doc: Document): Elements {
  const byId = <T extends HTMLElement>(id: string): T => {
    const el = doc.getElementById(id);
    if (!el) throw new Error(`missing element #${id}`);
    return el as T;
  };
  return {
    banner: byId("banner-area"),
    stats: byId("stats"),
    fileInput: byId<HTMLInputElement>("file-input"),
    storedId: byId<HTMLInputElement>("stored-id"),
    loadStored: byId<HTMLButtonElement>("load-stored"),
    search: byId<HTMLButtonElement>("search"),
    preview: byId<HTMLImageElement>("preview"),
    roiLayer: byId("roi-layer"),
    roiReadout: byId("roi-readout"),
    roiMatch: byId<HTMLButtonElement>("roi-match"),
    roiClear: byId<HTMLButtonElement>("roi-clear"),
    hits: byId("hits"),
  };
}

export class ExplorerApp {
  readonly store = new QueryStore();
  private els: Elements;
  private pendingImage: Blob | null = null;
  private roiInFlight = false;
  private dragStart: { x: number; y: number } | null = null;
  private selectionBox: HTMLElement | null = null;

  constructor(private doc: Document, private api: ApiClient) {
    this.els = grab(doc);
  }

  mount(): void {
    const e = this.els;
    e.fileInput.addEventListener("change", () => {
      const file = e.fileInput.files?.[0] ?? null;
      if (file) this.setPendingImage(file);
    });
    e.loadStored.addEventListener("click", () => void this.loadStoredImage());
    e.search.addEventListener("click", () => void this.submitQuery());
    e.roiMatch.addEventListener("click", () => void this.runRoiMatch());
    e.roiClear.addEventListener("click", () => this.clearRoi());
    e.roiLayer.addEventListener("mousedown", (ev) => this.onDragStart(ev as MouseEvent));
    e.roiLayer.addEventListener("mousemove", (ev) => this.onDragMove(ev as MouseEvent));
    e.roiLayer.addEventListener("mouseup", (ev) => this.onDragEnd(ev as MouseEvent));
    e.roiLayer.addEventListener("mouseleave", () => this.cancelDrag());
    void this.loadStats();
  }

  // ------------------------------------------------------------------ query

  setPendingImage(image: Blob): void {
    this.pendingImage = image;
    this.els.search.disabled = false;
    if (typeof URL !== "undefined" && typeof URL.createObjectURL === "function") {
      this.els.preview.src = URL.createObjectURL(image);
    }
  }

  async loadStats(): Promise<void> {
    try {
      renderStats(this.els.stats, await this.api.fetchStats());
    } catch (err) {
      this.showError(err);
    }
  }

  async loadStoredImage(): Promise<void> {
    const imageId = this.els.storedId.value.trim();
    if (!imageId) return;
    try {
      this.setPendingImage(await this.api.fetchStoredImage(imageId));
    } catch (err) {
      this.showError(err);
    }
  }

  async submitQuery(): Promise<void> {
    if (!this.pendingImage || this.els.search.disabled) return;
    const token = this.store.beginQuery();
    this.els.search.disabled = true;
    try {
      const payload = await this.api.postQuery(this.pendingImage);
      if (!this.store.commitQuery(token, payload.query_id, payload.hits)) {
        return; // a newer query superseded this response
      }
      this.clearRoiVisuals();
      renderHits(this.els.hits, payload.hits, (id) => this.api.imageUrl(id));
      this.updateRoiButtons();
    } catch (err) {
      this.showError(err); // page state stays as it was
    } finally {
      this.els.search.disabled = false;
    }
  }

  // -------------------------------------------------------------------- roi

  previewMetrics(): DisplayMetrics | null {
    const img = this.els.preview;
    const rect = this.els.roiLayer.getBoundingClientRect();
    if (!img.naturalWidth || !img.naturalHeight || !rect.width || !rect.height) {
      return null;
    }
    return {
      displayWidth: rect.width,
      displayHeight: rect.height,
      naturalWidth: img.naturalWidth,
      naturalHeight: img.naturalHeight,
    };
  }

  private layerPoint(ev: MouseEvent): { x: number; y: number } {
    const rect = this.els.roiLayer.getBoundingClientRect();
    return { x: ev.clientX - rect.left, y: ev.clientY - rect.top };
  }

  onDragStart(ev: MouseEvent): void {
    if (!this.store.state) return;
    this.dragStart = this.layerPoint(ev);
    this.selectionBox?.remove();
    this.selectionBox = this.doc.createElement("div");
    this.selectionBox.className = "roi-selection";
    this.els.roiLayer.append(this.selectionBox);
  }

  onDragMove(ev: MouseEvent): void {
    if (!this.dragStart || !this.selectionBox) return;
    const point = this.layerPoint(ev);
    const rect = dragToDisplayRect(this.dragStart.x, this.dragStart.y, point.x, point.y);
    Object.assign(this.selectionBox.style, {
      left: `${rect.x}px`,
      top: `${rect.y}px`,
      width: `${rect.w}px`,
      height: `${rect.h}px`,
    });
  }

  onDragEnd(ev: MouseEvent): void {
    if (!this.dragStart) return;
    const start = this.dragStart;
    this.dragStart = null;
    const point = this.layerPoint(ev);
    const metrics = this.previewMetrics();
    const display = dragToDisplayRect(start.x, start.y, point.x, point.y);
    const natural = metrics ? displayToNatural(display, metrics) : null;
    if (!natural) {
      this.clearRoiVisuals();
      return;
    }
    this.store.setRoi(natural);
    this.els.roiReadout.textContent =
      `ROI ${natural.x}, ${natural.y}, ${natural.w} x ${natural.h} (image pixels)`;
    if (this.selectionBox && metrics) {
      const snapped = naturalToDisplay(natural, metrics);
      Object.assign(this.selectionBox.style, {
        left: `${snapped.x}px`,
        top: `${snapped.y}px`,
        width: `${snapped.w}px`,
        height: `${snapped.h}px`,
      });
    }
    this.updateRoiButtons();
  }

  cancelDrag(): void {
    this.dragStart = null;
  }

  clearRoi(): void {
    this.store.setRoi(null);
    this.clearRoiVisuals();
    renderMatches(this.els.hits, new Map());
  }

  private clearRoiVisuals(): void {
    this.selectionBox?.remove();
    this.selectionBox = null;
    this.els.roiReadout.textContent = "no ROI selected";
    this.updateRoiButtons();
  }

  private updateRoiButtons(): void {
    const hasRoi = Boolean(this.store.state?.selectedRoi);
    this.els.roiMatch.disabled = !hasRoi || this.roiInFlight;
    this.els.roiClear.disabled = !hasRoi;
  }

  async runRoiMatch(): Promise<void> {
    const state = this.store.state;
    if (!state || !state.selectedRoi || this.roiInFlight) return;
    this.roiInFlight = true;
    this.updateRoiButtons();
    const queryId = state.queryId;
    try {
      const payload = await this.api.postRoiMatch(
        queryId,
        state.selectedRoi,
        state.hits.map((h) => h.image_id),
      );
      if (this.store.commitMatches(queryId, payload.matches) && this.store.state?.matches) {
        renderMatches(this.els.hits, this.store.state.matches);
      }
    } catch (err) {
      this.showError(err);
    } finally {
      this.roiInFlight = false;
      this.updateRoiButtons();
    }
  }

  // ----------------------------------------------------------------- errors

  private showError(err: unknown): void {
    const message =
      err instanceof ApiError
        ? err.status
          ? `${err.message} (HTTP ${err.status})`
          : err.message
        : String(err);
    renderBanner(this.els.banner, message);
  }
}

export function mountExplorer(doc: Document, api: ApiClient): ExplorerApp {
  const app = new ExplorerApp(doc, api);
  app.mount();
  return app;
}
