// Review screen wiring: B-mode/residue panes with contour overlays, a
// debounced threshold slider driving /segment, click-to-select ROIs driving
// /features, and a live feature table + score badge.

import { ApiError, ReviewApi } from "./api.js";
import { debounce } from "./debounce.js";
import {
  drawContours,
  renderErrorBanner,
  renderFeatureTable,
  renderRoiTable,
  renderScoreBadge,
  renderThreshold,
  roiAtPoint,
} from "./render.js";
import { ReviewStore } from "./state.js";

interface Elements {
  fileInput: HTMLInputElement;
  bmodeImage: HTMLImageElement;
  residueImage: HTMLImageElement;
  overlay: HTMLCanvasElement;
  slider: HTMLInputElement;
  sliderValue: HTMLElement;
  autoButton: HTMLButtonElement;
  profileSelect: HTMLSelectElement;
  roiTable: HTMLTableElement;
  featureTable: HTMLTableElement;
  scoreBadge: HTMLElement;
  banner: HTMLElement;
}

function grabElements(): Elements {
  const byId = <T extends HTMLElement>(id: string) => document.getElementById(id) as T;
  return {
    fileInput: byId("rf-file"),
    bmodeImage: byId("bmode"),
    residueImage: byId("residue"),
    overlay: byId("overlay"),
    slider: byId("threshold"),
    sliderValue: byId("threshold-value"),
    autoButton: byId("auto-threshold"),
    profileSelect: byId("profile"),
    roiTable: byId("roi-table"),
    featureTable: byId("feature-table"),
    scoreBadge: byId("score"),
    banner: byId("banner"),
  };
}

export function setupReviewScreen(api: ReviewApi, store: ReviewStore, el: Elements): void {
  let requestInFlight = false;

  const requestSegment = (threshold: number | null) => {
    const frameId = store.snapshot().frameId;
    if (!frameId) return;
    const token = store.beginSegment(threshold);
    requestInFlight = true;
    api
      .segment(frameId, threshold)
      .then((response) => store.applySegment(token, response))
      .catch((error: unknown) => {
        const message = error instanceof ApiError ? error.message : String(error);
        store.fail(token, "segment", message);
      })
      .finally(() => {
        requestInFlight = false;
      });
  };

  const debouncedSegment = debounce((threshold: number | null) => requestSegment(threshold), 150);

  el.slider.addEventListener("input", () => {
    debouncedSegment(Number(el.slider.value));
  });
  el.autoButton.addEventListener("click", () => {
    debouncedSegment.cancel();
    requestSegment(null);
  });

  el.overlay.addEventListener("click", (event) => {
    const state = store.snapshot();
    if (!state.frameId || !state.segmentation) return;
    const rect = el.overlay.getBoundingClientRect();
    const x = ((event.clientX - rect.left) / rect.width) * el.overlay.width;
    const y = ((event.clientY - rect.top) / rect.height) * el.overlay.height;
    const roi = roiAtPoint(state.segmentation, x, y);
    if (!roi) {
      renderErrorBanner(el.banner, "no ROI at point");
      return;
    }
    const token = store.beginFeatures(roi.label);
    api
      .roiFeatures(state.frameId, roi.label, el.profileSelect.value, state.threshold)
      .then((response) => store.applyFeatures(token, response))
      .catch((error: unknown) => {
        const message = error instanceof ApiError ? error.message : String(error);
        store.fail(token, "features", message);
      });
  });

  el.fileInput.addEventListener("change", async () => {
    const file = el.fileInput.files?.[0];
    if (!file) return;
    try {
      const upload = await api.uploadFrame(file);
      store.setFrame(upload.frame_id);
      el.bmodeImage.src = api.bmodeUrl(upload.frame_id);
      el.residueImage.src = api.residueUrl(upload.frame_id);
      el.overlay.width = upload.num_lines;
      el.overlay.height = upload.num_samples;
      requestSegment(null);
    } catch (error) {
      renderErrorBanner(el.banner, error instanceof ApiError ? error.message : String(error));
    }
  });

  store.subscribe((state) => {
    if (state.segmentation) renderThreshold(el.slider, el.sliderValue, state.segmentation);
    renderRoiTable(el.roiTable, state.segmentation, state.selectedLabel);
    drawContours(el.overlay, state.segmentation, state.selectedLabel, state.segmentPending || requestInFlight);
    renderFeatureTable(el.featureTable, state.features);
    renderScoreBadge(el.scoreBadge, state.features);
    renderErrorBanner(el.banner, state.error);
  });
}

if (typeof document !== "undefined" && document.getElementById("rf-file")) {
  const base = new URLSearchParams(window.location.search).get("service") ?? "http://127.0.0.1:8000";
  setupReviewScreen(new ReviewApi(base), new ReviewStore(), grabElements());
}
